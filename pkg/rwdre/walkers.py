"""
The epsilon-random walk in discrete and continuous time

A walker on an occupied site steps right with probability 1/2 + epsilon, on an
empty site with probability 1/2 - epsilon. In discrete time the step taken at
(site, time) is read off the shared direction field built from U_{x,n}; in
continuous time the walker jumps at the rings of a rate-1 Poisson clock.
"""

__all__ = [
    "ContinuousRun",
    "EmbeddedChain",
    "EnvironmentClock",
    "SimConfig",
    "TimeMode",
    "Trajectory",
    "check_trajectory",
    "direction",
    "embed_at_jump_times",
    "evolve_embedded",
    "run_continuous",
    "run_discrete",
    "simulate_discrete",
]

from dataclasses import dataclass, replace
from enum import Enum
import logging
import math
import numbers
import numpy as np
from typing import Any, Dict, List, Optional, Union

from .environments import (
    EnvironmentKind,
    EnvironmentSpec,
    OccupancyField,
    apply_event,
    sample_stationary,
    step_kernel,
)
from .errors import ConfigError
from .randomness import (
    MASK_64,
    RandomSource,
    StreamTag,
    arrival_blocks,
    poisson_arrivals,
    poisson_times,
    uniform_at,
    walk_uniform,
)

logger = logging.getLogger(__name__)


class TimeMode(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class SimConfig:
    """
    A full experiment description

    Parameters
    ----------
    epsilon: float
        the walk's bias, |epsilon| <= 1/2
    env: EnvironmentSpec
        the environment
    N: float
        horizon, a number of steps (discrete) or a time (continuous)
    trials: int
        number of independent trials M
    seed: int
        64-bit master seed
    time_mode: TimeMode = TimeMode.DISCRETE
        discrete or continuous time

    Methods
    -------
    validate(allow_irreversible: bool = False) -> SimConfig
        raises ConfigError naming the bad field, returns self otherwise;
        allow_irreversible admits a non-reversible control environment
    with_epsilon(epsilon: float) -> SimConfig
        a copy with another bias
    to_dict() -> Dict[str, Any]
        JSON-ready form
    from_dict(data: Dict[str, Any]) -> SimConfig
        the inverse of to_dict
    """

    epsilon: float
    env: EnvironmentSpec
    N: float
    trials: int
    seed: int
    time_mode: TimeMode = TimeMode.DISCRETE

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "time_mode", TimeMode(self.time_mode))
        except ValueError:
            raise ConfigError(
                "time_mode", f"unknown mode {self.time_mode!r}", "discrete, continuous"
            )

    @property
    def is_discrete(self) -> bool:
        return self.time_mode is TimeMode.DISCRETE

    @property
    def steps(self) -> int:
        return int(self.N)

    def validate(self, allow_irreversible: bool = False) -> "SimConfig":
        if not -0.5 <= self.epsilon <= 0.5:
            raise ConfigError(
                "epsilon",
                f"{self.epsilon} is outside [-1/2, 1/2]",
                "the jump probabilities 1/2 + epsilon and 1/2 - epsilon must lie "
                "in [0, 1]",
            )
        if isinstance(self.N, bool) or not isinstance(self.N, numbers.Real):
            raise ConfigError("N", f"horizon must be a number, got {self.N!r}")
        if not math.isfinite(self.N):
            raise ConfigError("N", f"horizon must be finite, got {self.N}")
        if not self.N >= 1:
            raise ConfigError("N", f"horizon must be at least 1, got {self.N}")
        if self.is_discrete and int(self.N) != self.N:
            raise ConfigError("N", f"discrete horizon must be integral, got {self.N}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer: {self.trials}")
        if not 0 <= self.seed <= MASK_64:
            raise ConfigError("seed", f"must fit in 64 unsigned bits: {self.seed}")
        self.env.validate(allow_irreversible)
        return self

    def with_epsilon(self, epsilon: float) -> "SimConfig":
        return replace(self, epsilon=epsilon)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": float(self.epsilon),
            "env": self.env.to_dict(),
            "N": int(self.N) if self.is_discrete else float(self.N),
            "trials": int(self.trials),
            "seed": int(self.seed),
            "time_mode": self.time_mode.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SimConfig":
        for key in ("epsilon", "env", "N", "trials", "seed"):
            if key not in data:
                raise ConfigError(key, "missing from config")
        fields = {}
        for key, cast in (("epsilon", float), ("trials", int), ("seed", int)):
            try:
                fields[key] = cast(data[key])
            except (TypeError, ValueError):
                raise ConfigError(key, f"not a number: {data[key]!r}")
        return cls(
            env=EnvironmentSpec.from_dict(data["env"]),
            N=data["N"],
            time_mode=data.get("time_mode", TimeMode.DISCRETE.value),
            **fields,
        )


@dataclass(eq=False)
class Trajectory:
    """
    Walker positions indexed by step

    Attributes
    ----------
    start: Union[int, np.ndarray]
        starting site, one per trial for batched trajectories
    positions: np.ndarray
        int64 positions, shape (steps+1,) or (M, steps+1)
    jump_times: Optional[np.ndarray] = None
        continuous mode only, the clock rings at which the jumps happened
    """

    start: Union[int, np.ndarray]
    positions: np.ndarray
    jump_times: Optional[np.ndarray] = None

    @property
    def steps(self) -> int:
        return self.positions.shape[-1] - 1

    @property
    def end(self) -> Union[int, np.ndarray]:
        return self.positions[..., -1]

    @property
    def displacement(self) -> Union[int, np.ndarray]:
        return self.positions[..., -1] - self.positions[..., 0]


def check_trajectory(trajectory: Trajectory, discrete: bool = True) -> None:
    """
    Raise ValueError unless the trajectory is nearest-neighbour,
    has the parity of a discrete walk and (continuous) increasing jump times
    """
    positions = np.asarray(trajectory.positions)
    steps = np.diff(positions, axis=-1)
    if np.any(np.abs(steps) != 1):
        raise ValueError("trajectory is not nearest-neighbour")
    if np.any(positions[..., 0] != np.asarray(trajectory.start)):
        raise ValueError("trajectory does not begin at its start")
    if discrete:
        n = np.arange(positions.shape[-1])
        shifted = positions - positions[..., :1]
        if np.any((shifted - n) % 2 != 0):
            raise ValueError("trajectory breaks the parity of a discrete walk")
    if trajectory.jump_times is not None:
        times = np.asarray(trajectory.jump_times)
        if len(times) != positions.shape[-1] - 1:
            raise ValueError("one position per jump plus the start is required")
        if np.any(np.diff(times) <= 0):
            raise ValueError("jump times are not strictly increasing")


def direction(occupied: Any, u: Any, epsilon: float) -> Any:
    """
    A^epsilon: +1 iff (occupied and u <= 1/2 + epsilon)
    or (empty and u <= 1/2 - epsilon), else -1

    Scalars in, int out; arrays in, int64 array out.
    """
    if np.ndim(occupied) == 0 and np.ndim(u) == 0:
        threshold = 0.5 + epsilon if occupied else 0.5 - epsilon
        return 1 if u <= threshold else -1
    threshold = np.where(np.asarray(occupied) == 1, 0.5 + epsilon, 0.5 - epsilon)
    return np.where(np.asarray(u) <= threshold, 1, -1).astype(np.int64)


def run_discrete(
    field: OccupancyField,
    src: RandomSource,
    x0: Union[int, np.ndarray],
    N: int,
    epsilon: float,
) -> Trajectory:
    """
    The discrete epsilon-walk from x0 on field

    Parameters
    ----------
    field: OccupancyField
        the environment, covering times 0..N
    src: RandomSource
        the WALK stream gives U_{x,n}; trial shape must match the field's batch
    x0: Union[int, np.ndarray]
        starting site(s)
    N: int
        number of steps
    epsilon: float
        the bias

    Returns
    -------
    Trajectory
        X_{n+1} = X_n + direction(eta_n(X_n), U_{X_n,n}, epsilon)
    """
    if N > field.horizon:
        raise ValueError(f"field covers {field.horizon} steps, {N} were requested")
    walk = src.stream(StreamTag.WALK)
    position = np.asarray(x0, dtype=np.int64)
    position = np.broadcast_to(position, field.batch_shape).copy()
    positions = np.empty(field.batch_shape + (N + 1,), dtype=np.int64)
    positions[..., 0] = position
    for n in range(N):
        occupied = field.at(n, position)
        step = direction(occupied, uniform_at(walk, position, n), epsilon)
        position = position + step
        positions[..., n + 1] = position
    return Trajectory(start=x0, positions=positions)


def simulate_discrete(config: SimConfig, trials: np.ndarray) -> np.ndarray:
    """
    Endpoint displacements X_N - X_0 of the given trials, started at 0

    Streams the environment instead of storing it; the result equals
    run_discrete(evolve_discrete(...)) for the same trials bit for bit.
    """
    env = config.env
    src = RandomSource(config.seed).for_trials(trials)
    walk = src.stream(StreamTag.WALK)
    state = sample_stationary(env, src)
    rows = np.arange(len(trials))
    position = np.zeros(len(trials), dtype=np.int64)
    frozen = env.kind is EnvironmentKind.FROZEN_BERNOULLI
    for n in range(config.steps):
        occupied = state[rows, position % env.L]
        position += direction(occupied, uniform_at(walk, position, n), config.epsilon)
        if not frozen:
            state = step_kernel(env, state, src, n)
    return position


class EnvironmentClock:
    """
    The continuous-time environment: one rate-1 clock per site (or per edge)

    The clocks are superposed into a single rate-L Poisson stream whose rings
    pick a site uniformly. At a ring the kind's local rule is applied, the same
    rule a discrete random-scan sub-update uses.

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment, frozen kinds never ring
    src: RandomSource
        single-trial source, its ENVIRONMENT_CLOCK stream is used

    Attributes
    ----------
    events: int
        number of rings applied so far

    Methods
    -------
    advance(config: bytearray, until: float) -> None
        apply in place every ring strictly before until
    """

    events: int = 0

    def __init__(self, spec: EnvironmentSpec, src: RandomSource) -> None:
        self.spec = spec
        self._src = src.stream(StreamTag.ENVIRONMENT_CLOCK)
        self._dynamic = spec.kind is not EnvironmentKind.FROZEN_BERNOULLI
        self._blocks = arrival_blocks(self._src, rate=float(spec.L))
        self._times = np.zeros(0)
        self._sites = np.zeros(0, dtype=np.int64)
        self._coins = np.zeros(0)
        self._cursor = 0

    def _refill(self) -> None:
        start, times = next(self._blocks)
        index = np.arange(start, start + len(times))
        L = self.spec.L
        self._times = times
        sites = (self._src.uniform(index, 1) * L).astype(np.int64)
        self._sites = np.minimum(sites, L - 1)
        self._coins = self._src.uniform(index, 2)
        self._cursor = 0

    def advance(self, config: bytearray, until: float) -> None:
        if not self._dynamic:
            return
        while True:
            if self._cursor >= len(self._times):
                self._refill()
            i = self._cursor
            if self._times[i] >= until:
                return
            apply_event(self.spec, config, int(self._sites[i]), float(self._coins[i]))
            self._cursor += 1
            self.events += 1


@dataclass(eq=False)
class ContinuousRun:
    """
    A completed continuous-time run

    Attributes
    ----------
    spec: EnvironmentSpec
        the environment
    epsilon: float
        the bias
    horizon: float
        the final time
    trajectory: Trajectory
        positions after each jump, with the jump times
    sigma: np.ndarray
        uint8 (jumps, L), the environment seen at each jump time
    initial: np.ndarray
        the configuration at time 0
    final: np.ndarray
        the configuration at the horizon
    environment_events: int
        number of environment clock rings applied
    """

    spec: EnvironmentSpec
    epsilon: float
    horizon: float
    trajectory: Trajectory
    sigma: np.ndarray
    initial: np.ndarray
    final: np.ndarray
    environment_events: int = 0


@dataclass(eq=False)
class EmbeddedChain:
    """
    A continuous run observed at its jump times

    Attributes
    ----------
    trajectory: Trajectory
        the walker after each jump, a discrete-time trajectory
    field: OccupancyField
        rows sigma_0..sigma_{k-1} followed by the configuration at the horizon
    jump_times: np.ndarray
        T_0 < T_1 < ... the clock rings
    """

    trajectory: Trajectory
    field: OccupancyField
    jump_times: np.ndarray


def _as_bytes(config: np.ndarray) -> bytearray:
    return bytearray(np.asarray(config, dtype=np.uint8).tobytes())


def _from_bytes(rows: List[bytes], L: int) -> np.ndarray:
    if not rows:
        return np.zeros((0, L), dtype=np.uint8)
    return np.frombuffer(b"".join(rows), dtype=np.uint8).reshape(len(rows), L).copy()


def run_continuous(
    spec: EnvironmentSpec,
    src: RandomSource,
    x0: int,
    horizon: float,
    epsilon: float,
    init: Optional[np.ndarray] = None,
) -> ContinuousRun:
    """
    The continuous-time epsilon-walk up to horizon

    The walker jumps at the rings T_n of its own rate-1 clock (POISSON stream)
    by direction(eta_{T_n}(X), U_n, epsilon) with U_n from the WALK stream.
    The environment runs on its own clocks, independent of the walker.

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment
    src: RandomSource
        single-trial source
    x0: int
        starting site
    horizon: float
        strictly positive finite final time
    epsilon: float
        the bias
    init: Optional[np.ndarray] = None
        starting configuration, drawn from the stationary measure if None
    """
    if not 0 < horizon < np.inf:
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    if init is None:
        init = sample_stationary(spec, src)
    jump_times = poisson_times(src.stream(StreamTag.POISSON), horizon)
    draws = np.atleast_1d(
        walk_uniform(src.stream(StreamTag.WALK), np.arange(len(jump_times)))
    )
    clock = EnvironmentClock(spec, src)
    config = _as_bytes(init)
    L = spec.L
    position = int(x0)
    positions = [position]
    sigma = []
    for n, t in enumerate(jump_times):
        clock.advance(config, t)
        sigma.append(bytes(config))
        position += direction(config[position % L], draws[n], epsilon)
        positions.append(position)
    clock.advance(config, horizon)

    return ContinuousRun(
        spec=spec,
        epsilon=epsilon,
        horizon=horizon,
        trajectory=Trajectory(
            start=int(x0),
            positions=np.asarray(positions, dtype=np.int64),
            jump_times=jump_times,
        ),
        sigma=_from_bytes(sigma, L),
        initial=np.asarray(init, dtype=np.uint8).copy(),
        final=_from_bytes([bytes(config)], L)[0],
        environment_events=clock.events,
    )


def embed_at_jump_times(run: ContinuousRun) -> EmbeddedChain:
    """
    Positions at the jump times and the embedded environment sigma_n = eta_{T_n}
    """
    trajectory = Trajectory(
        start=run.trajectory.start, positions=run.trajectory.positions.copy()
    )
    rows = np.vstack([run.sigma, run.final[None, :]])
    return EmbeddedChain(
        trajectory=trajectory,
        field=OccupancyField(spec=run.spec, rows=rows),
        jump_times=run.trajectory.jump_times,
    )


def evolve_embedded(
    spec: EnvironmentSpec, src: RandomSource, N: int, init: np.ndarray
) -> OccupancyField:
    """
    The continuous-time environment seen at the first N+1 rings of the
    walker's clock, as a discrete field with N+1 rows
    """
    if N < 0:
        raise ValueError(f"horizon must be non-negative, got {N}")
    times = poisson_arrivals(src.stream(StreamTag.POISSON), N + 1)
    clock = EnvironmentClock(spec, src)
    config = _as_bytes(init)
    rows = []
    for t in times:
        clock.advance(config, t)
        rows.append(bytes(config))
    return OccupancyField(spec=spec, rows=_from_bytes(rows, spec.L))
