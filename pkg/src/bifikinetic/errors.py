"""Exception types shared by the solvers and the bi-fidelity core."""


class BiFiError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(BiFiError, ValueError):
    """Malformed input: wrong shapes, empty sets, incompatible snapshots."""


class DomainError(BiFiError, ValueError):
    """A physical constraint is violated (e.g. scattering below its floor)."""


class StepSizeError(BiFiError, ValueError):
    """Time step exceeds the stability limit of the scheme."""


class SingularGramianError(BiFiError, ArithmeticError):
    """The selected Gramian is not numerically positive definite."""


class EmptyBasisError(BiFiError):
    """Greedy selection found no nonzero candidate."""
