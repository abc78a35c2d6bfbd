"""Exception hierarchy shared by all modules."""


class RiemannKWaveError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RiemannKWaveError, ValueError):
    """A state lies strictly outside the model's hyperbolicity box."""


class NonHyperbolicError(RiemannKWaveError):
    """The dispersion relation has complex roots at a state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class NotAWaveVectorError(RiemannKWaveError):
    """``lambda_i A^i(u)`` is numerically full rank."""

    def __init__(self, message, smallest_singular_value=None):
        super().__init__(message)
        self.smallest_singular_value = smallest_singular_value


class FrameDegeneracyError(RiemannKWaveError):
    """Wave vectors or polarizations of a frame are linearly dependent."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ContractError(RiemannKWaveError, ValueError):
    """A precondition of an operation is not met."""


class PartialSurfaceError(RiemannKWaveError):
    """Surface integration left the model domain before covering the grid."""

    def __init__(self, message, axis=None, reached=None):
        super().__init__(message)
        self.axis = axis
        self.reached = reached


class NoConvergenceError(RiemannKWaveError):
    """Newton iteration hit its iteration cap."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class CatastropheError(RiemannKWaveError):
    """The implicit-system Jacobian is singular: gradient catastrophe."""

    def __init__(self, message, x=None, condition=None):
        super().__init__(message)
        self.x = x
        self.condition = condition


class CoverageError(RiemannKWaveError):
    """The Riemann invariants left the tabulated surface grid."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ConfigError(RiemannKWaveError, ValueError):
    """A configuration document violates its schema."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
