class LabException(Exception):
    pass

class DimensionError(LabException):
    pass

class DomainError(LabException):
    pass

class InfeasibleTargetError(LabException):
    pass

class PreconditionError(LabException):
    pass

class StructuralGateError(PreconditionError):
    pass

class NonConvergenceError(LabException):
    pass

class UnsupportedBranchError(LabException):
    pass

class GalleryError(LabException):
    pass

class ConfigError(LabException):
    pass
