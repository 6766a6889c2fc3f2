from __future__ import annotations


# ##################################################################
# pshlab error
# root of every error raised by library operations; the runner turns
# these into failed task results instead of letting them escape
class PshLabError(Exception):
    pass


# ##################################################################
# dimension mismatch error
# a point, polynomial or expression has the wrong number of variables
class DimensionMismatchError(PshLabError):
    pass


# ##################################################################
# degenerate input error
# input outside the supported class, e.g. zero polynomial or a
# function that is -inf on every sampled sphere
class DegenerateInputError(PshLabError):
    pass


# ##################################################################
# domain error
# point, fiber or ball outside the declared polydisc
class DomainError(PshLabError):
    pass


# ##################################################################
# precondition error
# an operation's mathematical precondition failed on inspection
class PreconditionError(PshLabError):
    pass


# ##################################################################
# gram conditioning error
# weighted gram matrix numerically singular for the requested cap
class GramConditioningError(PshLabError):
    def __init__(self, message: str, cap: int) -> None:
        super().__init__(message)
        self.cap = cap


# ##################################################################
# eta search error
# no candidate eta on the grid makes the exponent pair non-degenerate
class EtaSearchError(PshLabError):
    def __init__(self, message: str, blocked: list[str]) -> None:
        super().__init__(message)
        self.blocked = blocked


# ##################################################################
# grid mismatch error
# two clouds compared on different grids or thresholds
class GridMismatchError(PshLabError):
    pass


# ##################################################################
# scenario error
# scenario file unreadable, malformed or failing schema validation
class ScenarioError(PshLabError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        super().__init__(message)
        self.line = line
        self.column = column


# ##################################################################
# emit error
# report could not be written; carries the offending path
class EmitError(PshLabError):
    def __init__(self, message: str, path: str) -> None:
        super().__init__(message)
        self.path = path
