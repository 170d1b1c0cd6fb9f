"""Exception hierarchy shared by every navgeom module."""


class NavGeomError(Exception):
    """Base class for all library errors."""


class OutsideDomain(NavGeomError):
    pass


class ZeroVector(NavGeomError):
    pass


class NotAdmissible(NavGeomError):
    """Vector or function lies outside the conic domain of the metric."""


class MixedRegime(NavGeomError):
    """Wind witness F(-W) straddles 1 across the chart."""


class NumericBreakdown(NavGeomError):
    pass


class BranchViolation(NavGeomError):
    """A quantity would require the Lorentz branch of a strong-wind metric."""


class NotInImage(NavGeomError):
    """The covector has no admissible preimage under the Legendre map."""


class NoConvergence(NavGeomError):
    pass


class UndefinedAtCriticalPoint(NavGeomError):
    pass


class FlowLeftDomain(NavGeomError):
    pass


class LeftDomain(NavGeomError):
    pass


class LeftCone(NavGeomError):
    pass


class FiberNotFound(NavGeomError):
    pass


class NotRegular(NavGeomError):
    pass


class RankDeficient(NavGeomError):
    pass


class NotUnitNormal(NavGeomError):
    pass


class NotHomothetic(NavGeomError):
    pass


class NotHomotheticWarning(UserWarning):
    pass


class DivergenceNotConstant(NavGeomError):
    pass


class ParseError(NavGeomError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ValidationError(NavGeomError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class IoError(NavGeomError, OSError):
    pass
