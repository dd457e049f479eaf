"""Exception hierarchy."""


class ParameterError(ValueError):
    """An input lies outside the domain of the operation."""


class NoResonanceError(ParameterError):
    """The cavity cutoff is at or above the intersubband transition."""


class SolverError(RuntimeError):
    """A secular root failed to converge inside its bracket."""


class ConsistencyError(ValueError):
    """Objects computed for different parameter sets were combined."""


class DarkStateError(ValueError):
    """A state without photon content has no emission distribution."""


class UndefinedEfficiencyError(ZeroDivisionError):
    """Both the radiative and the non-radiative rate vanish."""


class DimensionCapError(ValueError):
    """The dense oracle refuses matrices above its dimension cap."""
