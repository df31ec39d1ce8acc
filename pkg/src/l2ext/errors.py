"""Exception hierarchy for l2ext."""


class L2ExtError(Exception):
    """Base class for all library errors."""


class NotNilpotent(L2ExtError, ValueError):
    pass


class InternalConsistencyError(L2ExtError, RuntimeError):
    """A computed object failed one of its own structural invariants."""


class DomainError(L2ExtError, ValueError):
    """A point does not lie in the domain it claims to belong to."""


class BoundaryPoint(DomainError):
    pass


class ActionUndefined(L2ExtError, RuntimeError):
    pass


class NotInBigCell(L2ExtError, ValueError):
    pass


class InvalidBaseVector(L2ExtError, ValueError):
    pass


class InvalidPolarization(L2ExtError, RuntimeError):
    pass


class InconsistentFiber(L2ExtError, RuntimeError):
    pass


class IntegrandError(L2ExtError, FloatingPointError):
    pass


class SamplerDegenerate(L2ExtError, RuntimeError):
    pass


class ConfigError(L2ExtError, ValueError):
    pass
