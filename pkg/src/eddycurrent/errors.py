"""Exception hierarchy shared by all modules."""


class EddyCurrentError(Exception):
    """Base class for library errors."""


class GridSizeError(EddyCurrentError, ValueError):
    """Requested grid cannot be indexed."""


class MaterialError(EddyCurrentError, ValueError):
    """Material data violates a structural requirement (e.g. non-symmetric sigma)."""


class GridMismatchError(EddyCurrentError, ValueError):
    pass


class ConvergenceError(EddyCurrentError, RuntimeError):
    """Iterative solver failed; ``history`` holds the relative residuals."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


class CompatibilityError(EddyCurrentError, ValueError):
    """Boundary data fails the divergence compatibility condition."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class VerificationError(EddyCurrentError):
    pass
