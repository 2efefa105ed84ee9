"""Exception hierarchy shared by all modules."""


class CapwavesError(Exception):
    pass


class InvalidInputError(CapwavesError, ValueError):
    pass


class OutOfRegimeError(CapwavesError, ValueError):
    pass


class NumericDomainError(CapwavesError, FloatingPointError):
    pass


class VanishingDepthError(CapwavesError):
    """Raised when h = 1 + eps*zeta - beta*b drops below the floor."""

    def __init__(self, min_h, location, floor):
        self.min_h = float(min_h)
        self.location = location
        self.floor = float(floor)
        super().__init__(
            f"water height {self.min_h:.6g} below floor {self.floor:.3g} "
            f"at grid index {location}"
        )


class SolverFailure(CapwavesError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class StiffnessFailure(CapwavesError):
    pass


class NotEnoughHistory(CapwavesError):
    pass


class InvalidSweepError(CapwavesError, ValueError):
    pass


class DegenerateSweepError(CapwavesError):
    pass


class ConfigError(CapwavesError, ValueError):
    pass
