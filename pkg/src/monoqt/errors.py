"""Exception hierarchy shared by every module.

The CLI maps these onto its exit codes, so keep the classes stable.
"""


class MonoqtError(Exception):
    """Base class for all library errors."""


class ArgumentError(MonoqtError, ValueError):
    """An argument is outside the documented domain of an operation."""


class ContractError(MonoqtError, ValueError):
    """An input object violates a structural invariant (Hermiticity, norm, ...)."""


class NotPSDError(ContractError):
    """A matrix expected to be positive semidefinite has a significantly negative eigenvalue."""


class CapacityError(MonoqtError):
    """A size limit of the dense routines was exceeded."""


class UnsupportedError(MonoqtError):
    """The requested combination of options is not implemented."""
