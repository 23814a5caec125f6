class InvalidGrid(ValueError):
    """The requested mesh cannot be built."""


class KernelDomainError(ValueError):
    """A coefficient was evaluated outside the set where it is defined."""


class InvalidParameters(ValueError):
    pass


class InvalidNormSpec(ValueError):
    pass


class ProfileMismatch(ValueError):
    """Two profiles that must share a grid do not."""


class ConfigError(ValueError):
    pass


class NumericalFailure(Exception):
    """Base class for failures of a numerical stage that are not caused by bad input."""


class BracketFailure(NumericalFailure):
    def __init__(self, lower: float, upper: float, values: tuple):
        self.lower = lower
        self.upper = upper
        self.values = values
        super().__init__(
            f"No sign change of the compatibility residual on [{lower!r}, {upper!r}] "
            f"(residuals {values[0]!r}, {values[1]!r})"
        )


class NonContraction(NumericalFailure):
    def __init__(self, ratios, stage: str = 'profile'):
        self.ratios = list(ratios)
        self.stage = stage
        super().__init__(f"The {stage} iteration is not contracting (last ratios {self.ratios[-3:]})")


class MaxIterExceeded(NumericalFailure):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"No convergence after {iterations} iterations (residual {residual!r})")


class TailDominance(NumericalFailure):
    def __init__(self, index: int, tail_bar: float, inner: float):
        self.index = index
        self.tail_bar = tail_bar
        self.inner = inner
        super().__init__(
            f"Tail error bar {tail_bar!r} of G_{index} is not small against its [0, 1] part {inner!r}; "
            f"increase z_max"
        )


class WeightOverflow(NumericalFailure):
    def __init__(self, exponent: float):
        self.exponent = exponent
        super().__init__(f"exp({exponent!r}) does not fit in a double")


class NonPositiveTail(NumericalFailure):
    pass


class SensitivityBreakdown(NumericalFailure):
    pass
