"""Command-line front end.

    python -m cyclozeta <command> [--config FILE] [--key value ...]

Commands: coeffs, construct, galsum, kernel, search, verify, sweep.  A config
file holds one ``key = value`` per line (``#`` starts a comment); flags given
on the command line override it.  Exit status: 0 success, 1 invalid input,
2 computation failure (including failed checks).

Output columns
  coeffs     n, a
  construct  index, element, log_value
  galsum     d, N, size, s_half_weighted, s_third_weighted, s_alpha_plain,
             normalized, beta_empirical, beta_theoretical, h, lcal_N
  kernel     v, kernel_hat
  search     seed, T, d, budget, t_star, zeta_abs, baseline_max, reference
  verify     suite, d, checked, violations, ok
  sweep      as galsum, one row per N, then a summary line with the slope
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
import warnings
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .arith import CACHE_ENV, euler_phi
from .dedekind import coefficient_oracle, coefficient_table
from .errors import CycloZetaError
from .galsums import report, trend_slope
from .lfunc import EvalConfig
from .resonator import (DEFAULT_B, DEFAULT_GAMMA, DEFAULT_U, ResonatorSet, build_params,
                        build_set)
from .search import (WEIGHTINGS, KernelParams, append_ledger, default_resonator,
                     kernel_hat_zero_asymptotic, kernel_check_report, search_large_values)
from .suites import SUITES, run_suite

COMMANDS = ("coeffs", "construct", "galsum", "kernel", "search", "verify", "sweep")
FORMATS = ("csv", "json-lines", "text")

# key -> (parser, default); defaults of None mean "required by the commands that use it"
PARAMETERS: dict[str, tuple[Callable, object]] = {
    "d": (int, None),
    "N": (int, None),
    "T": (float, None),
    "u": (float, DEFAULT_U),
    "b": (float, DEFAULT_B),
    "gamma": (float, DEFAULT_GAMMA),
    "lambda": (float, None),
    "eta": (int, None),
    "epsilon": (float, 0.05),
    "budget": (int, 2000),
    "seed": (int, 0),
    "tolerance": (float, 1e-6),
    "n-max": (int, None),
    "n-lo": (int, 2**8),
    "n-hi": (int, 2**14),
    "suite": (str, None),
    "pairs": (int, 10**4),
    "check": (str, None),
    "grid-points": (int, 200),
    "beta": (float, 0.0),
    "weighting": (str, "none"),
    "output": (str, None),
    "ledger": (str, None),
    "search-ledger": (str, None),
    "cache-dir": (str, None),
    "threads": (int, 1),
    "format": (str, "text"),
}

NEEDS = {
    "coeffs": ("d", "n-max"),
    "construct": ("d", "N"),
    "galsum": ("d", "N"),
    "kernel": ("T",),
    "search": ("d", "T"),
    "verify": ("suite", "d"),
    "sweep": ("d",),
}


class UsageError(Exception):
    """Bad command line or config file (exit status 1)."""


class HelpRequested(Exception):
    """--help was given; the message is the usage text."""


class CheckFailed(Exception):
    """A verification ran to completion and found violations (exit status 2)."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def parse_config_file(path: str | os.PathLike) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (x.strip() for x in line.split("=", 1))
        out[key] = val
    return out


def _split_flags(argv: list[str]) -> tuple[str, dict[str, str]]:
    if not argv:
        raise UsageError(usage())
    if argv[0] in ("-h", "--help"):
        raise HelpRequested(usage())
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    flags: dict[str, str] = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if tok in ("-h", "--help"):
            raise HelpRequested(usage(command))
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise UsageError(f"missing value for --{key}")
            val = rest[i + 1]
            i += 2
        flags[key] = val
    return command, flags


def resolve(argv: list[str]) -> tuple[str, dict]:
    command, flags = _split_flags(argv)
    merged: dict[str, str] = {}
    if "config" in flags:
        merged.update(parse_config_file(flags.pop("config")))
    merged.update(flags)
    params = {}
    for key, raw in merged.items():
        if key not in PARAMETERS:
            raise UsageError(f"unknown parameter {key!r}")
        conv = PARAMETERS[key][0]
        try:
            params[key] = int(float(raw)) if conv is int and _is_integral(raw) else conv(raw)
        except ValueError:
            raise UsageError(f"parameter {key!r}: cannot parse {raw!r}") from None
    for key, (_, default) in PARAMETERS.items():
        params.setdefault(key, default)
    missing = [k for k in NEEDS[command] if params[k] is None]
    if command == "kernel" and params["eta"] is None and params["d"] is None:
        missing.append("eta")
    if missing:
        raise UsageError(f"{command}: missing required parameter(s) {', '.join(missing)}")
    if params["format"] not in FORMATS:
        raise UsageError(f"parameter 'format' must be one of {', '.join(FORMATS)}")
    if params["weighting"] not in WEIGHTINGS:
        raise UsageError(f"parameter 'weighting' must be one of {', '.join(WEIGHTINGS)}")
    if params["threads"] < 0:
        raise UsageError("parameter 'threads' must be >= 0")
    return command, params


def _is_integral(raw: str) -> bool:
    try:
        x = float(raw)
    except ValueError:
        return False
    return math.isfinite(x) and x == int(x)


def usage(command: str | None = None) -> str:
    lines = [f"usage: python -m cyclozeta {command or '<command>'} [--config FILE] [--key value ...]"]
    if command is None:
        lines.append("commands: " + ", ".join(COMMANDS))
    else:
        lines.append("required: " + ", ".join(f"--{k}" for k in NEEDS[command]))
    lines.append("parameters: " + ", ".join(f"--{k}" for k in PARAMETERS))
    lines.append(__doc__.split("Output columns", 1)[1].join(["Output columns", ""]))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def emit(rows: list[dict], fmt: str, stream) -> None:
    if fmt == "json-lines":
        for r in rows:
            stream.write(json.dumps(r, sort_keys=False) + "\n")
    elif fmt == "csv":
        if rows:
            w = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    else:
        for r in rows:
            stream.write(" ".join(f"{k}={v}" for k, v in r.items()) + "\n")


def cache_dir(params: dict) -> Path:
    root = params["cache-dir"] or os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "cyclozeta"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _params_key(d: int, N: int, u: float, b: float, gamma: float, lam) -> str:
    blob = json.dumps({"d": d, "N": N, "u": u, "b": b, "gamma": gamma, "lambda": lam,
                       "version": __version__}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def cached_resonator(params: dict, N: int | None = None) -> ResonatorSet:
    """Build or load a resonator set; a cache entry whose digest does not match is rebuilt."""
    d, N = params["d"], N if N is not None else params["N"]
    key = _params_key(d, N, params["u"], params["b"], params["gamma"], params["lambda"])
    path = cache_dir(params) / f"resonator-{key}.txt"
    if path.exists():
        text = path.read_text()
        head, _, body = text.partition("\n")
        if head == f"# sha256 {hashlib.sha256(body.encode()).hexdigest()}":
            try:
                return ResonatorSet.from_text(body)
            except (CycloZetaError, ValueError, KeyError):
                pass
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        M = build_set(build_params(d, N, params["u"], params["b"], params["gamma"],
                                   params["lambda"]))
    body = M.to_text()
    tmp = path.with_suffix(".tmp")
    tmp.write_text(f"# sha256 {hashlib.sha256(body.encode()).hexdigest()}\n{body}")
    os.replace(tmp, path)
    return M


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_coeffs(p: dict, out) -> None:
    table = coefficient_table(p["n-max"], p["d"])
    rows = [{"n": n, "a": int(table[n])} for n in range(1, p["n-max"] + 1)]
    if p["check"] == "oracle":
        oracle = coefficient_oracle(p["n-max"], p["d"])
        bad = [r["n"] for r, o in zip(rows, oracle) if r["a"] != o]
        if bad:
            raise CheckFailed(f"coefficient table disagrees with the oracle at n = {bad[:5]}")
    if p["format"] == "text":
        for r in rows:
            out.write(f"{r['n']} {r['a']}\n")
    else:
        emit(rows, p["format"], out)


def cmd_construct(p: dict, out) -> None:
    M = cached_resonator(p)
    if p["format"] == "text":
        out.write(M.to_text())
        return
    rows = [{"index": i, "element": str(m), "log_value": repr(m.log_value)}
            for i, m in enumerate(M.elements)]
    emit(rows, p["format"], out)


def _report_row(r) -> dict:
    return dict(zip(r.CSV_FIELDS, r.csv_row()))


def cmd_galsum(p: dict, out) -> None:
    r = report(cached_resonator(p), threads=p["threads"])
    if p["format"] == "text":
        out.write(r.to_text())
    elif p["format"] == "json-lines":
        out.write(json.dumps(r.to_dict()) + "\n")
    else:
        emit([_report_row(r)], "csv", out)


def cmd_kernel(p: dict, out) -> None:
    eta = p["eta"] if p["eta"] is not None else 2 * euler_phi(p["d"])
    kp = KernelParams(eta, p["epsilon"], p["T"])
    rep = kernel_check_report(kp, np.linspace(0.0, kp.band_limit, p["grid-points"]).tolist())
    if p["format"] == "text":
        out.write(f"eta = {eta}\nepsilon = {kp.epsilon!r}\nT = {kp.T!r}\nc = {kp.c!r}\n"
                  f"kernel_hat_0 = {rep.hat_zero!r}\n"
                  f"asymptotic = {kernel_hat_zero_asymptotic(eta)!r}\n"
                  f"ratio = {rep.asymptotic_ratio!r}\nmax_increase = {rep.max_increase!r}\n"
                  f"max_derivative = {rep.max_derivative!r}\n"
                  f"derivative_bound = {rep.derivative_bound!r}\nchecks_ok = {rep.ok}\n")
    else:
        grid = np.linspace(0.0, kp.band_limit, p["grid-points"]).tolist()
        emit([{"v": repr(v), "kernel_hat": repr(k)} for v, k in zip(grid, rep.values)],
             p["format"], out)
    if p["check"] == "lemma4" and not rep.ok:
        raise CheckFailed("kernel transform fails the monotonicity/derivative checks")


def cmd_search(p: dict, out) -> None:
    M = default_resonator(p["d"], p["T"], p["beta"], u=p["u"], b=p["b"], gamma=p["gamma"],
                          lam=p["lambda"])
    cfg = EvalConfig(tolerance=p["tolerance"])
    r = search_large_values(p["d"], p["T"], M, p["budget"], p["seed"], cfg,
                            threads=p["threads"], weighting=p["weighting"])
    if p["search-ledger"]:
        append_ledger(r, p["search-ledger"])
    if p["format"] == "text":
        out.write(r.to_text())
    else:
        emit([dict(zip(r.LEDGER_FIELDS, r.ledger_row()))], p["format"], out)


def cmd_verify(p: dict, out) -> None:
    if p["suite"] not in SUITES:
        raise UsageError(f"unknown suite {p['suite']!r}; choose from {', '.join(SUITES)}")
    res = run_suite(p["suite"], p["d"], pairs=p["pairs"], seed=p["seed"], N=p["N"])
    row = {"suite": res.suite, "d": res.d, "checked": res.checked,
           "violations": res.violations, "ok": res.ok}
    emit([row], p["format"], out)
    if not res.ok:
        raise CheckFailed(f"{res.suite}: {res.violations} violation(s) in {res.checked} checks")


def geometric_range(lo: int, hi: int) -> list[int]:
    if lo <= 16 or hi < lo:
        raise UsageError(f"need 16 < n-lo <= n-hi, got n-lo = {lo}, n-hi = {hi}")
    out, n = [], lo
    while n <= hi:
        out.append(n)
        n *= 2
    return out


def cmd_sweep(p: dict, out) -> None:
    Ns = geometric_range(p["n-lo"], p["n-hi"])
    reports = [report(cached_resonator(p, N), threads=p["threads"]) for N in Ns]
    slope = trend_slope(reports)
    if p["format"] == "json-lines":
        for r in reports:
            out.write(json.dumps(_report_row(r)) + "\n")
        out.write(json.dumps({"slope": slope}) + "\n")
    else:
        emit([_report_row(r) for r in reports], "csv" if p["format"] == "csv" else "text", out)
        out.write(f"# slope = {'null' if slope is None else repr(slope)}\n")


HANDLERS = {"coeffs": cmd_coeffs, "construct": cmd_construct, "galsum": cmd_galsum,
            "kernel": cmd_kernel, "search": cmd_search, "verify": cmd_verify,
            "sweep": cmd_sweep}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _provenance(command: str, params: dict, status: int, wall: float) -> str:
    return json.dumps({
        "command": command,
        "parameters": {k: v for k, v in params.items() if v is not None},
        "versions": {"cyclozeta": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "status": status,
        "wall_seconds": round(wall, 6),
    }, sort_keys=True)


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        command, params = resolve(argv)
    except HelpRequested as exc:
        stdout.write(f"{exc}\n")
        return 0
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    started = time.monotonic()
    buf = io.StringIO()
    try:
        HANDLERS[command](params, buf)
        status = 0
    except UsageError as exc:
        stderr.write(f"error: {exc}\n")
        status = 1
    except CheckFailed as exc:
        stderr.write(f"check failed: {exc}\n")
        status = 2
    except (CycloZetaError, ValueError) as exc:
        # precondition and capacity errors are ValueErrors: invalid input
        status = 1 if isinstance(exc, ValueError) else 2
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
    except (RuntimeError, ArithmeticError) as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        status = 2
    text = buf.getvalue()
    if params["output"]:
        Path(params["output"]).write_text(text)
    else:
        stdout.write(text)
    try:
        ledger = Path(params["ledger"]) if params["ledger"] else cache_dir(params) / "provenance.jsonl"
        with open(ledger, "a") as fh:
            fh.write(_provenance(command, params, status, time.monotonic() - started) + "\n")
    except OSError as exc:
        stderr.write(f"warning: could not write the provenance ledger: {exc}\n")
    return status


def main() -> None:
    sys.exit(run())
