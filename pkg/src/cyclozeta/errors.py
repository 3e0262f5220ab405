"""Exception types shared across the package."""


class CycloZetaError(Exception):
    """Base class for all library errors."""


class CapacityError(CycloZetaError, ValueError):
    """A request exceeds a configured resource limit (sieve, table, enumeration)."""


class PreconditionError(CycloZetaError, ValueError):
    """Arguments violate an operation's documented preconditions."""


class AdmissibilityError(PreconditionError):
    """Resonator parameters violate b*gamma < 1/log(u) or their ranges."""


class DecompositionError(CycloZetaError, ValueError):
    """An element is not of the canonical (l/q)*N_k form of its component."""


class ConstructionError(CycloZetaError, RuntimeError):
    """The resonator construction broke one of its own guarantees."""


class PoleError(CycloZetaError, ValueError):
    """Evaluation requested at the pole s = 1."""


class PrecisionError(CycloZetaError, RuntimeError):
    """The requested tolerance cannot be met within the configured term budget."""


class OracleMismatchError(CycloZetaError, RuntimeError):
    """An oracle produced a value that cannot be a valid coefficient."""
