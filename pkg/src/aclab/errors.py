"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for contract violations raised by this package."""


class ResolutionError(LabError):
    """A grid does not resolve the transition layer for the requested epsilon."""


class GeometryError(LabError):
    """Evaluation outside a geometry's valid domain (poles, CMC range, ...)."""


class SolverError(LabError):
    """A linear or nonlinear solve failed in a way that is not a valid result."""

    def __init__(self, message, near_null_eigenvalue=None):
        super().__init__(message)
        self.near_null_eigenvalue = near_null_eigenvalue


class AnalysisError(LabError):
    """Post-processing contract violation (empty nodal set, floor breach, ...)."""
