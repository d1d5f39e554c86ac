"""Exception hierarchy shared by all modules."""


class DudeLabError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(DudeLabError, ValueError):
    """A SystemParams/SimulationParams value violates a model assumption."""


class DensityNonPositive(ParameterError):
    pass


class AlphaTooSmall(ParameterError):
    pass


class PowerOrderingViolated(ParameterError):
    pass


class NonPositivePower(ParameterError):
    pass


class ConditionOneViolated(ParameterError):
    """Q_S/Q_M < P_S/P_M: the uplink power ratio is below the downlink one."""


class NegativeNoise(ParameterError):
    pass


class InvalidConstant(ParameterError):
    """Bandwidth, amplifier efficiency or circuit power out of range."""


class InvalidSimulation(ParameterError):
    pass


class DomainError(DudeLabError, ValueError):
    pass


class DivergentIntegral(DudeLabError, ValueError):
    pass


class InfeasibleCase(DudeLabError, ValueError):
    pass


class IntegrationFailure(DudeLabError, ArithmeticError):
    """Adaptive quadrature hit its subdivision limit.

    ``value`` and ``error`` hold the best estimate reached so far.
    """

    def __init__(self, message, value=float("nan"), error=float("inf")):
        super().__init__(message)
        self.value = value
        self.error = error


class ConfigError(DudeLabError, ValueError):
    pass


class TooFewSamples(DudeLabError, ValueError):
    pass


class UnknownFigure(DudeLabError, ValueError):
    pass
