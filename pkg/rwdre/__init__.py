__all__ = [
    "CapacityError",
    "ConfigError",
    "CoupledPair",
    "EnvironmentKind",
    "EnvironmentSpec",
    "ExactChainResult",
    "OccupancyField",
    "RandomSource",
    "ReducibleChainError",
    "RunManifest",
    "SimConfig",
    "SpeedEstimate",
    "StreamTag",
    "TimeMode",
    "Trajectory",
    "antisymmetry_test",
    "backward_law_test",
    "check_detailed_balance",
    "check_non_crossing",
    "choose_endpoint",
    "embed_at_jump_times",
    "estimate_speed",
    "evolve_discrete",
    "exact_speed",
    "mirror_asymmetry_stat",
    "poisson_times",
    "run_backward",
    "run_continuous",
    "run_discrete",
    "sample_stationary",
    "static_env_solomon_check",
    "step_kernel",
    "transition_matrix",
    "uniform_at",
    "walk_uniform",
]

from .coupling import *
from .environments import *
from .errors import *
from .estimators import *
from .manifest import *
from .randomness import *
from .settings import *
from .walkers import *

__author__: str = "SC van Nostrand"
__email__: str = "scvannost@gmail.com"
__version__: str = "0.1.0"
