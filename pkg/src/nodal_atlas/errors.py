"""Exception hierarchy shared by all modules."""


class NodalAtlasError(Exception):
    pass


class ParameterError(NodalAtlasError, ValueError):
    pass


class MeshIntegrityError(NodalAtlasError):
    pass


class ConstructionError(NodalAtlasError):
    pass


class AssemblyError(NodalAtlasError):
    pass


class SolverError(NodalAtlasError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class NumericError(NodalAtlasError):
    pass


class BranchAmbiguityError(NodalAtlasError):
    def __init__(self, message, overlap=None):
        super().__init__(message)
        self.overlap = overlap


class DegenerateFunctionError(NodalAtlasError):
    pass


class ToleranceError(NodalAtlasError):
    pass


class InvalidLoopError(NodalAtlasError):
    pass


class UndersampledLoopError(InvalidLoopError):
    pass


class RadiusAdjustmentError(NodalAtlasError):
    pass


class UsageError(NodalAtlasError, ValueError):
    pass


class GeneratorError(NodalAtlasError):
    pass


class ArrangementInputError(NodalAtlasError, ValueError):
    pass
