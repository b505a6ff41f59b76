from enum import Enum, IntEnum, auto

__version__ = "1.0.0"


class Infinite(Enum):
    """Length of a half-line. Kept apart from floats so no arithmetic ever touches it."""
    INFINITE = auto()

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = Infinite.INFINITE


class Example1Kind(Enum):
    LINE = auto()
    SINGLE_BUBBLE = auto()
    BUBBLE_TOWER = auto()
    NONE = auto()


class LineCase(Enum):
    TWO_TRANSLATES = auto()
    CENTERED = auto()
    TRUNCATED = auto()


class Verdict(Enum):
    ATTAINED = auto()
    ESCAPING = auto()
    INCONCLUSIVE = auto()


class RearrangementMode(Enum):
    DECREASING = "dec"
    SYMMETRIC = "sym"
    HYBRID = "hybrid"


class ExitCode(IntEnum):
    OK = 0
    VALIDATION = 1
    NUMERICAL = 2


DEFAULT_P = 4.0
DEFAULT_MASS = 1.0
DEFAULT_H = 0.02
# soliton mass beyond +-DEFAULT_L is about 2 exp(-2 c_p L) = 4e-9 at p = 4, mu = 1
DEFAULT_L = 40.0

# relative tolerance under which parallel edges count as equally long
EQUAL_LENGTH_RTOL = 1e-12
# relative tolerance for the a = phi_m(0) tie of the line problem
CENTERED_RTOL = 1e-10
# bisection tolerance on the rescaled shift z
SHIFT_XTOL = 1e-12

# share of each truncated half-line counted as "outer" / "inner"
OUTER_SHARE = 0.2
INNER_SHARE = 0.2

OUTPUT_DIR_ENV = "GROUNDSTATES_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "runs"
