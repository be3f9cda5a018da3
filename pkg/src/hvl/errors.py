"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes, so user-facing failures should be
raised as one of the classes below rather than bare ValueError/RuntimeError.
"""


class HvlError(Exception):
    """Base class for all package errors."""


class ConfigError(HvlError):
    """Malformed or schema-violating run configuration."""


class ClassificationError(HvlError):
    """Potential metadata does not admit a singularity classification."""


class SolverError(HvlError):
    """Generic failure inside the bound-state solver."""


class SupercriticalError(SolverError):
    """The origin singularity is too strong; no self-adjoint solve exists."""


class NoEigenvalueError(SolverError):
    """No eigenvalue with the requested properties inside the bracket."""


class NodeCountError(SolverError):
    """Requested radial node count unattainable in the bracket."""


class DivergenceError(HvlError):
    """A requested expectation value diverges at an integration endpoint."""


class PreconditionError(HvlError):
    """Operation called outside its documented domain of validity."""


class FHRefusalError(HvlError):
    """Parameter derivative refused: the boundary coefficient index depends
    on the parameter, which makes the origin limit divergent."""


class DomainError(HvlError, ValueError):
    """Special-function argument outside the supported domain."""


class RangeError(HvlError, ValueError):
    """Special-function argument outside the overflow-safe range."""
