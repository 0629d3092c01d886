AMPLITUDE_FLOOR = 1e-12


class OpenSystemsError(ValueError):
    pass


class UsageError(OpenSystemsError):
    pass


class DimensionError(OpenSystemsError):
    pass


class HermiticityError(OpenSystemsError):
    pass


class NormalizationError(OpenSystemsError):
    pass


class TraceError(OpenSystemsError):
    pass


class PositivityError(OpenSystemsError):
    pass


class CompletenessError(OpenSystemsError):
    pass


class CompletePositivityError(OpenSystemsError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class NotTracePreserving(OpenSystemsError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotCompletelyPositiveGenerator(OpenSystemsError):
    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class IsometryError(OpenSystemsError):
    pass


class DomainError(OpenSystemsError):
    pass


class GridError(OpenSystemsError):
    pass


class RegimeError(OpenSystemsError):
    pass


class AmplitudeZeroFlag(OpenSystemsError):
    """Raised where |c1(t)| vanishes and the decay rates diverge."""

    def __init__(self, t, amplitude):
        super().__init__(f"|c1| = {amplitude:.3e} < {AMPLITUDE_FLOOR:.0e} at t = {t}; rates diverge")
        self.t = t
        self.amplitude = amplitude


class FormatError(OpenSystemsError):
    pass
