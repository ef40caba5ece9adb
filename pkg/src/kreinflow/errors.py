"""Exception hierarchy.  The CLI maps these onto exit codes."""


class KreinError(Exception):
    exit_code = 1


class InputError(KreinError, ValueError):
    """Malformed or out-of-contract input."""


class NumericalError(KreinError, ArithmeticError):
    """A numerical self-check failed."""


class AmbiguousSplitError(NumericalError):
    """An eigenvalue sits on the boundary of a requested spectral region."""

    exit_code = 2

    def __init__(self, message, eigenvalue=None, admissible=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.admissible = admissible or []


class GapError(AmbiguousSplitError):
    """No admissible annulus or bulk gap."""


class DegenerateError(NumericalError):
    """A form that must be non-degenerate has a (numerically) zero direction."""


class NotJUnitaryError(InputError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class TransversalityError(KreinError):
    """An eigenphase is pinned at 0 on a parameter interval."""

    exit_code = 3

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PathResolutionError(TransversalityError):
    """Eigenvector matching failed even after repeated step halving."""
