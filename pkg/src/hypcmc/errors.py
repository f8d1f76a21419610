"""Exception types raised by the solver stack."""


class ConstraintViolation(ValueError):
    """Raised when a mean curvature value is outside the admissible range |H| < 1."""


class NonConvergence(RuntimeError):
    """Newton iteration failed to reach the residual tolerance.

    ``H`` and ``k`` are filled in by the layer that knows them (continuation
    attaches the failing H, the exhaustion driver the ball index).
    """

    def __init__(self, message, H=None, k=None, history=None):
        super().__init__(message)
        self.H = H
        self.k = k
        self.history = list(history or [])

    def __str__(self):
        msg = super().__str__()
        extra = []
        if self.H is not None:
            extra.append(f"H={self.H:g}")
        if self.k is not None:
            extra.append(f"k={self.k}")
        return f"{msg} ({', '.join(extra)})" if extra else msg


class EllipticityLoss(RuntimeError):
    """The coefficient matrix A lost positive definiteness at an accepted iterate."""


class BarrierViolation(RuntimeError):
    """An exhaustion iterate left the umbilic-cap height interval."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class ShootingFailure(RuntimeError):
    """The equivariant shooting method could not bracket or hit the target value."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class ConfigError(ValueError):
    """Invalid run configuration. Carries the offending key and/or line number."""

    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line
