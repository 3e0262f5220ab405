"""Dirichlet characters modulo d.

Characters are built from a fixed CRT decomposition of (Z/dZ)^*: one cyclic
factor per odd prime power (generated by its least primitive root), and for
2^e with e >= 3 the pair <-1> x <5>.  A character is the tuple of exponents
k_i with chi(g_i) = exp(2 pi i k_i / n_i); values are kept as exact angles
(fractions of a full turn).
"""

from __future__ import annotations

import cmath
import functools
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import divisors, euler_phi, factorize
from .errors import PreconditionError


def root_of_unity(angle: Fraction) -> complex:
    """exp(2 pi i angle), exact at multiples of a quarter turn."""
    a = angle % 1
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): -1 + 0j,
             Fraction(1, 4): 1j, Fraction(3, 4): -1j}
    if a in exact:
        return exact[a]
    return cmath.exp(2j * math.pi * float(a))


@dataclass(frozen=True)
class _Factor:
    modulus: int      # p**e
    order: int        # n_i
    generator: int    # residue mod p**e
    log: dict = field(hash=False, compare=False)  # residue mod p**e -> discrete log


def _primitive_root(q: int, p: int) -> int:
    phi = euler_phi(q)
    ps = list(factorize(phi))
    for g in range(2, q):
        if g % p and all(pow(g, phi // r, q) != 1 for r in ps):
            return g
    raise AssertionError(f"no primitive root mod {q}")


def _cyclic(q: int, n: int, g: int) -> _Factor:
    table, x = {}, 1
    for k in range(n):
        table[x] = k
        x = x * g % q
    return _Factor(q, n, g, table)


@functools.lru_cache(maxsize=None)
def _decomposition(d: int) -> tuple[_Factor, ...]:
    factors = []
    for p, e in sorted(factorize(d).items()) if d > 1 else []:
        q = p**e
        if p != 2:
            factors.append(_cyclic(q, euler_phi(q), _primitive_root(q, p)))
        elif e == 2:
            factors.append(_cyclic(4, 2, 3))
        elif e >= 3:
            # -1 and 5 generate (Z/2^e)^* independently; log of x is (a, b)
            # with x = (-1)^a 5^b.
            n5 = 2 ** (e - 2)
            minus, five = {}, {}
            x = 1
            for b in range(n5):
                minus[x] = 0
                minus[(-x) % q] = 1
                five[x] = b
                five[(-x) % q] = b
                x = x * 5 % q
            factors.append(_Factor(q, 2, q - 1, minus))
            factors.append(_Factor(q, n5, 5, five))
    return tuple(factors)


@dataclass(frozen=True)
class DirichletCharacter:
    """A Dirichlet character with exact values.

    ``angles`` maps each residue a (0 <= a < modulus, gcd(a, modulus) = 1) to
    the fraction t with chi(a) = exp(2 pi i t).
    """

    modulus: int
    label: int
    exponents: tuple[int, ...]
    angles: tuple[tuple[int, Fraction], ...]
    conductor: int

    @property
    def is_principal(self) -> bool:
        return all(t == 0 for _, t in self.angles)

    @functools.cached_property
    def _angle_map(self) -> dict[int, Fraction]:
        return dict(self.angles)

    def angle(self, n: int) -> Fraction | None:
        return self._angle_map.get(n % self.modulus)

    def __call__(self, n: int) -> complex:
        return evaluate(self, n)

    @property
    def is_real(self) -> bool:
        return all(t.denominator <= 2 for _, t in self.angles)

    @property
    def order(self) -> int:
        return math.lcm(*(t.denominator for _, t in self.angles)) if self.angles else 1

    def values_array(self) -> np.ndarray:
        """Complex values chi(0), ..., chi(modulus - 1)."""
        out = np.zeros(self.modulus, dtype=complex)
        for a, t in self.angles:
            out[a] = root_of_unity(t)
        return out

    def to_record(self) -> str:
        table = ",".join(f"{a}:{t.numerator}/{t.denominator}" for a, t in self.angles)
        return (f"modulus={self.modulus} label={self.label} conductor={self.conductor} "
                f"angles={table}")

    @classmethod
    def from_record(cls, text: str) -> "DirichletCharacter":
        fields = dict(part.split("=", 1) for part in text.split())
        modulus, label = int(fields["modulus"]), int(fields["label"])
        chi = character_group(modulus)[label]
        angles = tuple((int(a), Fraction(t)) for a, t in
                       (item.split(":") for item in fields["angles"].split(",")))
        if angles != chi.angles or int(fields["conductor"]) != chi.conductor:
            raise PreconditionError("record does not match the canonical character")
        return chi


def _units(d: int) -> list[int]:
    if d == 1:
        return [0]
    return [a for a in range(1, d) if math.gcd(a, d) == 1]


def _conductor(d: int, angles: dict[int, Fraction]) -> int:
    for f in divisors(d):
        if all(t == 0 for a, t in angles.items() if a % f == 1 % f):
            return f
    return d


@functools.lru_cache(maxsize=None)
def character_group(d: int) -> tuple[DirichletCharacter, ...]:
    """All phi(d) characters mod d in canonical order, principal first."""
    if d < 1:
        raise PreconditionError("modulus must be >= 1")
    factors = _decomposition(d)
    units = _units(d)
    logs = [[f.log[a % f.modulus] for f in factors] for a in units]
    out = []
    for label, ks in enumerate(itertools.product(*(range(f.order) for f in factors))):
        angles = {}
        for a, la in zip(units, logs):
            angles[a] = sum((Fraction(k * l, f.order) for k, l, f in zip(ks, la, factors)),
                            Fraction(0)) % 1
        out.append(DirichletCharacter(d, label, tuple(ks), tuple(sorted(angles.items())),
                                      _conductor(d, angles)))
    return tuple(out)


def evaluate(chi: DirichletCharacter, n: int) -> complex:
    """chi(n); zero when gcd(n, modulus) > 1."""
    t = chi.angle(n)
    if t is None:
        return 0j
    return root_of_unity(t)


def conductor_and_primitive(chi: DirichletCharacter) -> tuple[int, DirichletCharacter]:
    """The conductor f and the primitive character mod f inducing chi."""
    f, d = chi.conductor, chi.modulus
    if f == d:
        return f, chi
    # chi*(n) = chi(a) for any lift a = n mod f that is a unit mod d
    target = {}
    for a, t in chi.angles:
        target.setdefault(a % f, t)
    wanted = tuple(sorted((r, target[r]) for r in _units(f))) if f > 1 else ((0, Fraction(0)),)
    for cand in character_group(f):
        cand_angles = cand.angles if f > 1 else ((0, Fraction(0)),)
        if cand_angles == wanted:
            return f, cand
    raise AssertionError(f"no primitive character mod {f} induces {chi.to_record()}")


def conjugate(chi: DirichletCharacter) -> DirichletCharacter:
    want = tuple((a, (-t) % 1) for a, t in chi.angles)
    for cand in character_group(chi.modulus):
        if cand.angles == want:
            return cand
    raise AssertionError("conjugate character missing from the group")


def primitive_factors(d: int) -> list[DirichletCharacter]:
    """chi* for every non-principal chi mod d, in the group's canonical order."""
    return [conductor_and_primitive(chi)[1] for chi in character_group(d)[1:]]
