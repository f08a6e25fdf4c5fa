"""Exception hierarchy shared by every ccbisect module."""


class CCBisectError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(CCBisectError, ValueError):
    pass


class DomainError(CCBisectError, ValueError):
    """A chart parameter lies outside its compact domain."""


class StarViolation(CCBisectError, ValueError):
    """The polygon is not star-shaped with respect to the given star point."""


class NoBracket(CCBisectError, RuntimeError):
    """Exponential bracketing could not enclose a bisecting value."""


class AmbiguousWinding(CCBisectError, RuntimeError):
    """The map came too close to zero on a loop to read off a winding number."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NoZeroFound(CCBisectError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MeasureParseError(CCBisectError, ValueError):
    """Structured input error; ``row`` is 1-based and counts the header line."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingColumns(MeasureParseError):
    pass


class NonPositiveWeight(MeasureParseError):
    pass


class TooFewMeasures(MeasureParseError):
    pass


class CutterParseError(CCBisectError, ValueError):
    pass
