__all__ = [
    "ACCEPTANCE_SIGMAS",
    "BALANCE_TOLERANCE",
    "CI_Z",
    "DEFAULT_DENSITY",
    "DEFAULT_EPSILON",
    "DEFAULT_GRID",
    "DEFAULT_HORIZON",
    "DEFAULT_KIND",
    "DEFAULT_RING",
    "DEFAULT_SEED",
    "DEFAULT_SUBSTEPS",
    "DEFAULT_TRIALS",
    "LAW_TEST_LEVEL",
    "MAX_KERNEL_SITES",
    "MAX_MIRROR_SITES",
    "MAX_ORACLE_SITES",
    "MAX_ORACLE_SITES_EAST",
    "MAX_POWER_ITERATIONS",
    "MIN_EXPECTED_COUNT",
    "MIN_REPORT_TRIALS",
    "ORACLE_TOLERANCE",
    "STATIONARY_TOLERANCE",
    "TRIAL_CHUNK",
]

from typing import Tuple

# command-line defaults
DEFAULT_KIND: str = "east-random-scan"
DEFAULT_RING: int = 64
DEFAULT_DENSITY: float = 0.7
DEFAULT_EPSILON: float = 0.25
DEFAULT_HORIZON: int = 10_000
DEFAULT_TRIALS: int = 10_000
DEFAULT_SEED: int = 1
DEFAULT_SUBSTEPS: int = 1
DEFAULT_GRID: Tuple[float, float, float] = (-0.4, 0.4, 0.1)

# size guards for exact computations
MAX_KERNEL_SITES: int = 12
MAX_MIRROR_SITES: int = 10
MAX_ORACLE_SITES: int = 7
MAX_ORACLE_SITES_EAST: int = 8

BALANCE_TOLERANCE: float = 1e-12
STATIONARY_TOLERANCE: float = 1e-12
ORACLE_TOLERANCE: float = 1e-10
MAX_POWER_ITERATIONS: int = 20_000

ACCEPTANCE_SIGMAS: float = 4.0
CI_Z: float = 1.959963984540054
MIN_REPORT_TRIALS: int = 1_000
LAW_TEST_LEVEL: float = 0.99
MIN_EXPECTED_COUNT: float = 5.0

# trials per work unit; fixed so results do not depend on the worker count
TRIAL_CHUNK: int = 1_000
