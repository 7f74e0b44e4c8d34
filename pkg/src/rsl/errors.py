"""Exception types raised across the package."""


class RSLError(Exception):
    """Base class for all package errors."""


class NoFlowError(RSLError):
    """Neither an analytic Lie-derivative override nor a Reeb flow is available."""


class NotClosedError(RSLError):
    def __init__(self, residual: float):
        super().__init__(f"orbit does not close: residual {residual:.3e}")
        self.residual = residual


class StepCountError(RSLError):
    pass


class AsymmetryError(RSLError):
    def __init__(self, defect: float):
        super().__init__(f"discretized operator asymmetry defect {defect:.3e} too large")
        self.defect = defect


class RootBracketingError(RSLError):
    def __init__(self, mu: float, value: float):
        super().__init__(f"near-zero determinant minimum {value:.3e} at mu={mu:.6f} without sign change")
        self.mu = mu
        self.value = value


class MismatchError(RSLError):
    pass


class CompatibilityLostError(RSLError):
    pass


class ContinuationAmbiguityError(RSLError):
    pass


class BranchMatchingError(RSLError):
    pass


class ConfigError(RSLError):
    pass
