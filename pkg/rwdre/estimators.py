"""
Speed estimates, the antisymmetry test and the exact finite-ring oracle
"""

__all__ = [
    "AntisymmetryReport",
    "ClockRateReport",
    "EmbeddedSpeedReport",
    "ExactChainResult",
    "Regime",
    "SolomonReport",
    "SpeedEstimate",
    "SweepRow",
    "antisymmetry_test",
    "clock_rate_check",
    "embedded_speed_check",
    "estimate_speed",
    "exact_speed",
    "joint_kernel",
    "mirror_invariance",
    "oracle_admits",
    "solve_stationary",
    "speed_sweep",
    "static_env_solomon_check",
    "static_regime",
]

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from enum import Enum
from itertools import repeat
import logging
import math
import numpy as np
from scipy import linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .environments import (
    EnvironmentKind,
    EnvironmentSpec,
    admissible_states,
    state_bits,
    stationary_measure,
    transition_matrix,
)
from .errors import CapacityError, ConfigError, ReducibleChainError
from .randomness import (
    RandomSource,
    StreamTag,
    derive_seed,
    poisson_arrivals,
    uniform_at,
)
from .settings import (
    ACCEPTANCE_SIGMAS,
    BALANCE_TOLERANCE,
    CI_Z,
    DEFAULT_SEED,
    MAX_ORACLE_SITES,
    MAX_ORACLE_SITES_EAST,
    MAX_POWER_ITERATIONS,
    STATIONARY_TOLERANCE,
    TRIAL_CHUNK,
)
from .walkers import SimConfig, direction, run_continuous, simulate_discrete

logger = logging.getLogger(__name__)

# sub-seeds
_MINUS_RUN: int = 1
_SWEEP_ROW: int = 2


@dataclass
class SpeedEstimate:
    """
    A Monte Carlo estimate of the speed with a 95% normal interval

    Attributes
    ----------
    mean: float
        average displacement per step (or per unit time)
    std_error: float
        sample standard deviation over sqrt(trials)
    ci_low: float
    ci_high: float
    trials: int
    horizon: float
        N, steps or time
    """

    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    trials: int
    horizon: float

    @classmethod
    def from_samples(cls, velocities: np.ndarray, horizon: float) -> "SpeedEstimate":
        velocities = np.asarray(velocities, dtype=float)
        M = len(velocities)
        if M == 0:
            raise ValueError("no samples")
        mean = float(velocities.mean())
        std_error = float(velocities.std(ddof=1) / math.sqrt(M)) if M > 1 else 0.0
        return cls(
            mean=mean,
            std_error=std_error,
            ci_low=mean - CI_Z * std_error,
            ci_high=mean + CI_Z * std_error,
            trials=M,
            horizon=horizon,
        )

    def contains(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def within(self, value: float, sigmas: float = ACCEPTANCE_SIGMAS) -> bool:
        """|mean - value| <= sigmas * std_error"""
        return abs(self.mean - value) <= sigmas * self.std_error

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _trial_velocities(config: SimConfig, start: int, stop: int) -> np.ndarray:
    if config.is_discrete:
        trials = np.arange(start, stop)
        return simulate_discrete(config, trials) / config.steps
    horizon = float(config.N)
    src = RandomSource(config.seed)
    return np.array(
        [
            run_continuous(
                config.env, src.for_trial(t), 0, horizon, config.epsilon
            ).trajectory.displacement
            / horizon
            for t in range(start, stop)
        ]
    )


def _chunked(
    function: Any, arguments: Tuple[Any, ...], M: int, workers: int
) -> np.ndarray:
    """
    Evaluate function(*arguments, start, stop) over fixed trial chunks, in order
    """
    starts = list(range(0, M, TRIAL_CHUNK))
    stops = [min(start + TRIAL_CHUNK, M) for start in starts]
    if workers <= 1 or len(starts) == 1:
        parts = []
        for start, stop in zip(starts, stops):
            parts.append(function(*arguments, start, stop))
            logger.debug("trials %d-%d done", start, stop - 1)
        return np.concatenate(parts)
    columns = [repeat(argument) for argument in arguments]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(function, *columns, starts, stops))
    logger.debug("%d chunks done on %d workers", len(parts), workers)
    return np.concatenate(parts)


def estimate_speed(
    config: SimConfig, workers: int = 1, allow_irreversible: bool = False
) -> SpeedEstimate:
    """
    Average X_N / N (or X_t / t) over config.trials independent trials

    Each trial starts from its own stationary configuration. Trials are split
    into fixed chunks and reassembled in trial order, so the estimate does not
    depend on workers.

    Parameters
    ----------
    config: SimConfig
        the experiment
    workers: int = 1
        number of worker processes
    allow_irreversible: bool = False
        accept a non-reversible environment, for negative controls only
    """
    config.validate(allow_irreversible)
    velocities = _chunked(_trial_velocities, (config,), config.trials, workers)
    estimate = SpeedEstimate.from_samples(velocities, config.N)
    logger.info(
        "%s eps=%g N=%s M=%d: v=%.6f +/- %.6f",
        config.env.kind.value,
        config.epsilon,
        config.N,
        config.trials,
        estimate.mean,
        estimate.std_error,
    )
    return estimate


@dataclass
class AntisymmetryReport:
    v_plus: SpeedEstimate
    v_minus: SpeedEstimate
    sum: float
    sum_se: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def antisymmetry_test(
    config: SimConfig,
    minus_env: Optional[EnvironmentSpec] = None,
    workers: int = 1,
    allow_irreversible: bool = False,
) -> AntisymmetryReport:
    """
    Estimate v(epsilon) and v(-epsilon) with independent seeds and test
    |sum| <= ACCEPTANCE_SIGMAS * sqrt(SE+^2 + SE-^2)

    Parameters
    ----------
    config: SimConfig
        the +epsilon experiment
    minus_env: Optional[EnvironmentSpec] = None
        environment of the -epsilon run, config.env when None; a different
        environment makes a negative control
    workers: int = 1
        number of worker processes
    allow_irreversible: bool = False
        let the -epsilon run use a non-reversible minus_env; the +epsilon
        run must stay reversible
    """
    config.validate()
    minus = replace(
        config,
        epsilon=-config.epsilon,
        seed=derive_seed(config.seed, _MINUS_RUN),
        env=minus_env or config.env,
    )
    minus.validate(allow_irreversible)
    v_plus = estimate_speed(config, workers)
    v_minus = estimate_speed(minus, workers, allow_irreversible)
    total = v_plus.mean + v_minus.mean
    sum_se = math.hypot(v_plus.std_error, v_minus.std_error)
    passed = abs(total) <= ACCEPTANCE_SIGMAS * sum_se
    logger.info("antisymmetry: sum=%.6f se=%.6f -> %s", total, sum_se, passed)
    return AntisymmetryReport(
        v_plus=v_plus, v_minus=v_minus, sum=total, sum_se=sum_se, passed=passed
    )


@dataclass
class ExactChainResult:
    """
    The stationary law of the joint (environment, walker position mod L) chain

    Attributes
    ----------
    spec: EnvironmentSpec
    epsilon: float
    stationary: np.ndarray
        probabilities of the states a * L + y, a running over admissible
        environment states and y over ring positions
    exact_speed: float
        2 epsilon (2 P[walker site occupied] - 1)
    occupied_probability: float
    dimension: int
        (2^L - [east or west]) L
    residual: float
        max |stationary P - stationary|
    classes: int
        closed communicating classes of the environment with positive mass
    """

    spec: EnvironmentSpec
    epsilon: float
    stationary: np.ndarray
    exact_speed: float
    occupied_probability: float
    dimension: int
    residual: float
    classes: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "env": self.spec.to_dict(),
            "epsilon": self.epsilon,
            "exact_speed": self.exact_speed,
            "occupied_probability": self.occupied_probability,
            "dimension": self.dimension,
            "residual": self.residual,
            "classes": self.classes,
        }


def oracle_admits(env: EnvironmentSpec) -> bool:
    if env.kind is EnvironmentKind.FROZEN_BERNOULLI:
        return False
    limit = MAX_ORACLE_SITES_EAST if env.is_constrained else MAX_ORACLE_SITES
    return env.L <= limit


def joint_kernel(
    env: EnvironmentSpec, epsilon: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One step of the joint chain: the walker moves reading the current
    configuration, then the environment takes one kernel step

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        the dense kernel over states a * L + y, and the admissible environment
        states (indices into the 2^L enumeration)
    """
    L = env.L
    states = admissible_states(env)
    K = transition_matrix(env)[np.ix_(states, states)]
    bits = state_bits(L)[states]
    right = np.where(bits == 1, 0.5 + epsilon, 0.5 - epsilon)
    y = np.arange(L)
    W = np.zeros((len(states), L, L))
    W[:, y, (y + 1) % L] += right
    W[:, y, (y - 1) % L] += 1.0 - right
    size = len(states) * L
    return np.einsum("ab,ayz->aybz", K, W).reshape(size, size), states


def solve_stationary(P: np.ndarray, method: str = "direct") -> np.ndarray:
    """
    The stationary vector of an irreducible stochastic matrix

    Parameters
    ----------
    P: np.ndarray
        row-stochastic, irreducible
    method: str = "direct"
        "direct" solves (P^T - I) pi = 0 with the last equation replaced by the
        normalization; "power" iterates the lazy chain (P + I) / 2 and falls back
        to the direct solve when it does not settle

    Returns
    -------
    np.ndarray
        pi with pi P = pi and sum 1
    """
    if method not in ("direct", "power"):
        raise ValueError(f"unknown method {method!r}, use 'direct' or 'power'")
    n = P.shape[0]
    if method == "power":
        lazy = 0.5 * (P + np.eye(n))
        pi = np.full(n, 1.0 / n)
        for i in range(MAX_POWER_ITERATIONS):
            following = pi @ lazy
            if np.max(np.abs(following - pi)) < STATIONARY_TOLERANCE:
                logger.debug("power iteration settled after %d steps", i + 1)
                return following / following.sum()
            pi = following
        logger.warning(
            "power iteration did not settle in %d steps, solving directly",
            MAX_POWER_ITERATIONS,
        )

    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = linalg.solve(A, b)
    return pi / pi.sum()


def exact_speed(
    env: EnvironmentSpec, epsilon: float, method: str = "direct"
) -> ExactChainResult:
    """
    v(epsilon) from the stationary law of the joint chain on a small ring

    Environments that split into several closed classes (ssep keeps its
    particle number) are solved class by class, each stationary vector
    weighted by the class's stationary environment mass.

    Raises
    ------
    ValueError
        for frozen-bernoulli, whose joint chain is reducible
    CapacityError
        beyond settings.MAX_ORACLE_SITES (MAX_ORACLE_SITES_EAST for east and west)
    ReducibleChainError
        if a class of positive mass is not closed or its joint chain is not
        irreducible
    """
    env.validate(allow_irreversible=True)
    if not -0.5 <= epsilon <= 0.5:
        raise ConfigError("epsilon", f"{epsilon} is outside [-1/2, 1/2]")
    if env.kind is EnvironmentKind.FROZEN_BERNOULLI:
        raise ValueError(
            "frozen-bernoulli has no exact ring oracle, use static_env_solomon_check"
        )
    if not oracle_admits(env):
        limit = MAX_ORACLE_SITES_EAST if env.is_constrained else MAX_ORACLE_SITES
        raise CapacityError(
            f"{env.kind.value} oracle needs L <= {limit}, got {env.L}"
        )

    L = env.L
    P, states = joint_kernel(env, epsilon)
    K = transition_matrix(env)[np.ix_(states, states)]
    pi_env = stationary_measure(env)[states]
    count, labels = connected_components(
        csr_matrix(K > 0), directed=True, connection="strong"
    )

    stationary = np.zeros(P.shape[0])
    classes = 0
    for label in range(count):
        members = labels == label
        mass = pi_env[members].sum()
        if mass <= 0.0:
            continue
        if K[np.ix_(members, ~members)].sum() > BALANCE_TOLERANCE:
            raise ReducibleChainError(
                f"environment class {label} carries mass {mass:g} but is not closed"
            )
        joint = (np.flatnonzero(members)[:, None] * L + np.arange(L)).ravel()
        block = P[np.ix_(joint, joint)]
        pieces, _ = connected_components(
            csr_matrix(block > 0), directed=True, connection="strong"
        )
        if pieces != 1:
            raise ReducibleChainError(
                f"joint chain on class {label} splits into {pieces} parts"
            )
        stationary[joint] = mass * solve_stationary(block, method)
        classes += 1

    residual = float(np.max(np.abs(stationary @ P - stationary)))
    occupied = float(stationary @ state_bits(L)[states].reshape(-1))
    speed = 2.0 * epsilon * (2.0 * occupied - 1.0)
    logger.debug(
        "oracle %s L=%d p=%g eps=%g: v=%.12f residual=%.2e over %d classes",
        env.kind.value,
        L,
        env.p,
        epsilon,
        speed,
        residual,
        classes,
    )
    return ExactChainResult(
        spec=env,
        epsilon=epsilon,
        stationary=stationary,
        exact_speed=speed,
        occupied_probability=occupied,
        dimension=P.shape[0],
        residual=residual,
        classes=classes,
    )


def mirror_invariance(env: EnvironmentSpec, epsilon: float) -> float:
    """
    max |pi_{-epsilon}(mirror s) - pi_epsilon(s)| over joint states s

    The mirror map sends site i to -i for the environment and y to -y for the
    walker. It vanishes for mirror-symmetric kernels (ssep, iid-refresh).
    """
    plus = exact_speed(env, epsilon)
    minus = exact_speed(env, -epsilon)
    L = env.L
    states = admissible_states(env)
    bits = state_bits(L)[states].astype(np.int64)
    reflected = bits[:, (-np.arange(L)) % L]
    image = np.searchsorted(states, (reflected << np.arange(L)).sum(axis=1))
    y = np.arange(L)
    mirror = (image[:, None] * L + (-y) % L).ravel()
    return float(np.max(np.abs(minus.stationary[mirror] - plus.stationary)))


class Regime(str, Enum):
    BALLISTIC_RIGHT = "ballistic-right"
    BALLISTIC_LEFT = "ballistic-left"
    ZERO_SPEED = "zero-speed"


def static_regime(p: float, epsilon: float) -> Tuple[Regime, float, float, float]:
    """
    Classify the walk in a frozen iid Bernoulli(p) field on the whole lattice

    rho(x) is the left/right jump odds at x: a = (1/2 - eps) / (1/2 + eps) on
    occupied sites and 1/a on empty ones.

    Returns
    -------
    Tuple[Regime, float, float, float]
        regime, E[rho], E[1/rho] and the closed-form speed
        (1 - E[rho]) / (1 + E[rho]) to the right,
        -(1 - E[1/rho]) / (1 + E[1/rho]) to the left, 0 otherwise
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError("p", f"density must lie in [0, 1], got {p}")
    if not -0.5 < epsilon < 0.5:
        raise ConfigError(
            "epsilon",
            f"{epsilon} is outside (-1/2, 1/2)",
            "the jump odds are undefined at |epsilon| = 1/2",
        )
    a = (0.5 - epsilon) / (0.5 + epsilon)
    rho = p * a + (1.0 - p) / a
    inverse = p / a + (1.0 - p) * a
    if rho < 1.0:
        return Regime.BALLISTIC_RIGHT, rho, inverse, (1.0 - rho) / (1.0 + rho)
    if inverse < 1.0:
        speed = -(1.0 - inverse) / (1.0 + inverse)
        return Regime.BALLISTIC_LEFT, rho, inverse, speed
    return Regime.ZERO_SPEED, rho, inverse, 0.0


def _static_velocities(
    p: float, epsilon: float, N: int, seed: int, start: int, stop: int
) -> np.ndarray:
    # eta(x) = [U_x < p] on the INITIAL stream, realized only where visited
    src = RandomSource(seed).for_trials(np.arange(start, stop))
    sites = src.stream(StreamTag.INITIAL)
    walk = src.stream(StreamTag.WALK)
    position = np.zeros(stop - start, dtype=np.int64)
    for n in range(N):
        occupied = sites.uniform(position) < p
        position += direction(occupied, uniform_at(walk, position, n), epsilon)
    return position / N


@dataclass
class SolomonReport:
    """
    The walk in a frozen field on the whole lattice against the closed form

    Speed fields stay None in the zero-speed regime, where nothing is simulated.
    """

    p: float
    epsilon: float
    regime: Regime
    expected_rho: float
    expected_inverse_rho: float
    closed_form: float
    v_plus: Optional[SpeedEstimate] = None
    v_minus: Optional[SpeedEstimate] = None
    speed_passed: Optional[bool] = None
    sum: Optional[float] = None
    sum_se: Optional[float] = None
    antisymmetry_passed: Optional[bool] = None
    passed: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["regime"] = self.regime.value
        return data


def static_env_solomon_check(
    p: float,
    epsilon: float,
    N: int,
    M: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> SolomonReport:
    """
    Compare the simulated speed in a static Bernoulli(p) field with its closed
    form, and v(epsilon) with -v(-epsilon)

    Parameters
    ----------
    p: float
        density
    epsilon: float
        the bias, |epsilon| < 1/2
    N: int
        steps
    M: int
        trials per sign
    seed: int = DEFAULT_SEED
    workers: int = 1
    """
    regime, rho, inverse, closed = static_regime(p, epsilon)
    if N < 1:
        raise ConfigError("N", f"horizon must be at least 1, got {N}")
    if M < 2:
        raise ConfigError("trials", f"need at least 2 trials, got {M}")
    report = SolomonReport(
        p=p,
        epsilon=epsilon,
        regime=regime,
        expected_rho=rho,
        expected_inverse_rho=inverse,
        closed_form=closed,
    )
    if regime is Regime.ZERO_SPEED:
        logger.info(
            "static field p=%g eps=%g: E[rho]=%.4f E[1/rho]=%.4f, zero speed",
            p,
            epsilon,
            rho,
            inverse,
        )
        return report

    plus = _chunked(_static_velocities, (p, epsilon, N, seed), M, workers)
    minus_seed = derive_seed(seed, _MINUS_RUN)
    minus = _chunked(_static_velocities, (p, -epsilon, N, minus_seed), M, workers)
    report.v_plus = SpeedEstimate.from_samples(plus, N)
    report.v_minus = SpeedEstimate.from_samples(minus, N)
    report.speed_passed = report.v_plus.within(closed)
    report.sum = report.v_plus.mean + report.v_minus.mean
    report.sum_se = math.hypot(report.v_plus.std_error, report.v_minus.std_error)
    report.antisymmetry_passed = abs(report.sum) <= ACCEPTANCE_SIGMAS * report.sum_se
    report.passed = report.speed_passed and report.antisymmetry_passed
    logger.info(
        "static field p=%g eps=%g: v=%.5f closed form %.5f, sum=%.5f -> %s",
        p,
        epsilon,
        report.v_plus.mean,
        closed,
        report.sum,
        report.passed,
    )
    return report


@dataclass
class EmbeddedSpeedReport:
    continuous: SpeedEstimate
    embedded: SpeedEstimate
    difference: float
    paired_se: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def embedded_speed_check(config: SimConfig) -> EmbeddedSpeedReport:
    """
    Continuous displacement per unit time against displacement per clock ring
    over the same continuous runs

    Both speeds come from the same trials, so the difference is judged by the
    standard error of the per-trial differences
    """
    config.validate()
    horizon = float(config.N)
    src = RandomSource(config.seed)
    per_time = np.empty(config.trials)
    per_jump = np.empty(config.trials)
    jumps = np.empty(config.trials)
    for t in range(config.trials):
        trial = src.for_trial(t)
        run = run_continuous(config.env, trial, 0, horizon, config.epsilon)
        displacement = run.trajectory.displacement
        jumps[t] = run.trajectory.steps
        per_time[t] = displacement / horizon
        per_jump[t] = displacement / jumps[t] if jumps[t] else 0.0
    continuous = SpeedEstimate.from_samples(per_time, horizon)
    embedded = SpeedEstimate.from_samples(per_jump, float(jumps.mean()))
    difference = continuous.mean - embedded.mean
    paired_se = 0.0
    if config.trials > 1:
        spread = np.std(per_time - per_jump, ddof=1)
        paired_se = float(spread / math.sqrt(config.trials))
    passed = abs(difference) <= ACCEPTANCE_SIGMAS * paired_se
    logger.info(
        "embedded speed %.5f vs continuous %.5f (se %.5f) -> %s",
        embedded.mean,
        continuous.mean,
        paired_se,
        passed,
    )
    return EmbeddedSpeedReport(
        continuous=continuous,
        embedded=embedded,
        difference=difference,
        paired_se=paired_se,
        passed=passed,
    )


@dataclass
class ClockRateReport:
    n: int
    arrival_time: float
    deviation: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def clock_rate_check(
    seed: int = DEFAULT_SEED, n: int = 1_000_000, tolerance: float = 0.004
) -> ClockRateReport:
    """|T_n / n - 1| for the walker's rate-1 clock"""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    arrival = float(poisson_arrivals(RandomSource(seed, StreamTag.POISSON), n)[-1])
    deviation = abs(arrival / n - 1.0)
    return ClockRateReport(
        n=n,
        arrival_time=arrival,
        deviation=deviation,
        tolerance=tolerance,
        passed=deviation <= tolerance,
    )


@dataclass
class SweepRow:
    epsilon: float
    estimate: SpeedEstimate
    exact_speed: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "mean": self.estimate.mean,
            "se": self.estimate.std_error,
            "ci_low": self.estimate.ci_low,
            "ci_high": self.estimate.ci_high,
            "exact_speed": self.exact_speed,
        }


def speed_sweep(
    config: SimConfig, epsilons: Sequence[float], workers: int = 1
) -> List[SweepRow]:
    """
    One speed estimate per epsilon, each from its own seed, plus the exact
    speed when the oracle admits the environment and time is discrete
    """
    rows = []
    exact = config.is_discrete and oracle_admits(config.env)
    for i, epsilon in enumerate(epsilons):
        epsilon = float(epsilon)
        seed = derive_seed(config.seed, _SWEEP_ROW, i)
        estimate = estimate_speed(replace(config, epsilon=epsilon, seed=seed), workers)
        value = exact_speed(config.env, epsilon).exact_speed if exact else None
        rows.append(SweepRow(epsilon=epsilon, estimate=estimate, exact_speed=value))
    return rows
