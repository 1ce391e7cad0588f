"""Exception hierarchy shared by all cmcstab modules."""


class CmcStabError(Exception):
    """Base class for every error raised by the package."""


class InvalidSpace(CmcStabError, ValueError):
    pass


class PointOutsideChart(CmcStabError, ValueError):
    pass


class MismatchedBasePoints(CmcStabError, ValueError):
    pass


class NotUnitVector(CmcStabError, ValueError):
    pass


class NoKillingField(CmcStabError):
    pass


class UnsupportedSpace(CmcStabError, ValueError):
    pass


class DegenerateImmersion(CmcStabError):
    pass


class ChartGuardViolation(PointOutsideChart):
    pass


class NonClosedMesh(CmcStabError):
    pass


class DisconnectedMesh(CmcStabError):
    pass


class NegativeMassEntry(CmcStabError):
    pass


class SolverNoConvergence(CmcStabError):
    def __init__(self, message, iterations=None, best_residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.best_residual = best_residual


class IndefiniteFirstEigenfunction(CmcStabError):
    pass


class ZeroFunction(CmcStabError, ValueError):
    pass


class NonPositiveEigenfunction(CmcStabError, ValueError):
    pass


class NonConstantH(CmcStabError):
    pass


class ConfigError(CmcStabError, ValueError):
    """Raised for malformed run configurations; ``path`` names the offending key."""

    def __init__(self, message, path=None):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
