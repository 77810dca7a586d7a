"""
Forward and backward walks on one shared direction field

The backward walk is pinned at time N and built down to time 0 with the same
A^epsilon as the forward walk. Read backwards in time it is a (-epsilon)-walk
on the reversed environment, which by reversibility is again the environment.
"""

__all__ = [
    "CoupledPair",
    "LawTestReport",
    "backward_law_test",
    "check_non_crossing",
    "choose_endpoint",
    "couple",
    "gap_steps",
    "reversed_direction",
    "run_backward",
]

from dataclasses import asdict, dataclass
import logging
import math
import numpy as np
from scipy import stats
from typing import Any, Dict, List, Optional, Union

from .environments import (
    EnvironmentSpec,
    OccupancyField,
    evolve_discrete,
    sample_stationary,
)
from .randomness import RandomSource, StreamTag, derive_seed, uniform_at
from .settings import LAW_TEST_LEVEL, MIN_EXPECTED_COUNT, TRIAL_CHUNK
from .walkers import (
    SimConfig,
    Trajectory,
    direction,
    evolve_embedded,
    run_discrete,
)

logger = logging.getLogger(__name__)

# sub-seeds of a law test
_BACKWARD_SAMPLE: int = 1
_DIRECT_SAMPLE: int = 2


@dataclass(eq=False)
class CoupledPair:
    """
    A forward epsilon-walk and a backward walk built on one direction field

    Attributes
    ----------
    forward: Trajectory
        X, started at 0 and run to N
    backward: Trajectory
        X_hat, pinned at X_hat_N = endpoint and run back to time 0
        positions are indexed by time, positions[..., n] = X_hat_n
    endpoint: Union[int, np.ndarray]
        x, with x = N mod 2
    horizon: int
        N
    """

    forward: Trajectory
    backward: Trajectory
    endpoint: Union[int, np.ndarray]
    horizon: int


def _check_parity(x: Union[int, np.ndarray], N: int) -> None:
    if np.any((np.asarray(x) - N) % 2 != 0):
        raise ValueError(f"endpoint must have the parity of N = {N}")


def reversed_direction(occupied: Any, u: Any, epsilon: float) -> Any:
    """
    The step of the backward walk read forwards in time, -A^epsilon
    Equal to direction(occupied, 1 - u, -epsilon) away from the thresholds
    """
    return -direction(occupied, u, epsilon)


def run_backward(
    field: OccupancyField,
    src: RandomSource,
    x: Union[int, np.ndarray],
    N: int,
    epsilon: float,
) -> Trajectory:
    """
    X_hat_N = x and X_hat_{m-1} = X_hat_m - A^epsilon(X_hat_m, m) for m = N..1

    Parameters
    ----------
    field: OccupancyField
        the environment, covering times 0..N
    src: RandomSource
        the same source as the forward walk, so both read one A^epsilon
    x: Union[int, np.ndarray]
        the pinned endpoint(s), with the parity of N
    N: int
        horizon
    epsilon: float
        the bias of the forward construction

    Returns
    -------
    Trajectory
        positions indexed by time 0..N; start is X_hat_0
    """
    _check_parity(x, N)
    if N > field.horizon:
        raise ValueError(f"field covers {field.horizon} steps, {N} were requested")
    walk = src.stream(StreamTag.WALK)
    position = np.asarray(x, dtype=np.int64)
    position = np.broadcast_to(position, field.batch_shape).copy()
    positions = np.empty(field.batch_shape + (N + 1,), dtype=np.int64)
    positions[..., N] = position
    for m in range(N, 0, -1):
        occupied = field.at(m, position)
        step = direction(occupied, uniform_at(walk, position, m), epsilon)
        position = position - step
        positions[..., m - 1] = position
    return Trajectory(start=positions[..., 0].copy(), positions=positions)


def choose_endpoint(v_eps: float, delta: float, N: int) -> int:
    """
    x_tilde = floor((v_eps - delta / 2) N), moved up by one if its parity
    differs from N's
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    x_tilde = math.floor((v_eps - delta / 2) * N)
    if (x_tilde - N) % 2 == 0:
        return x_tilde
    return x_tilde + 1


def couple(
    spec: EnvironmentSpec,
    src: RandomSource,
    epsilon: float,
    N: int,
    x: Union[int, np.ndarray],
    backward_src: Optional[RandomSource] = None,
) -> CoupledPair:
    """
    Build a batch of coupled pairs

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment
    src: RandomSource
        trial-addressed source for the environment and the forward walk
    epsilon: float
        the forward bias
    N: int
        horizon
    x: Union[int, np.ndarray]
        backward endpoints
    backward_src: Optional[RandomSource] = None
        the backward walk's source, src when None; anything else breaks the
        shared direction field
    """
    _check_parity(x, N)
    field = evolve_discrete(spec, src, N, sample_stationary(spec, src))
    forward = run_discrete(field, src, 0, N, epsilon)
    backward = run_backward(field, backward_src or src, x, N, epsilon)
    return CoupledPair(forward=forward, backward=backward, endpoint=x, horizon=N)


def check_non_crossing(pair: CoupledPair) -> Union[int, np.ndarray]:
    """
    (X_hat_0 - X_0)(X_hat_N - X_N), non-negative on a shared direction field
    """
    f, b = pair.forward.positions, pair.backward.positions
    product = (b[..., 0] - f[..., 0]) * (b[..., -1] - f[..., -1])
    return int(product) if np.ndim(product) == 0 else product


def gap_steps(pair: CoupledPair) -> np.ndarray:
    """Per-step changes of X_hat - X, in {-2, 0, 2} under the parity condition"""
    return np.diff(pair.backward.positions - pair.forward.positions, axis=-1)


@dataclass
class LawTestReport:
    """
    Two-sample chi-square comparison of endpoint displacement laws

    Attributes
    ----------
    statistic: float
        the chi-square statistic
    threshold: float
        its LAW_TEST_LEVEL quantile
    dof: int
        degrees of freedom after merging sparse bins
    p_value: float
        the test's p-value
    passed: bool
        statistic <= threshold
    backward_mean: float
        mean of X_hat_0 - x
    direct_mean: float
        mean of the direct walk's displacement
    trials: int
        samples per side
    """

    statistic: float
    threshold: float
    dof: int
    p_value: float
    passed: bool
    backward_mean: float
    direct_mean: float
    trials: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _counts(sample: np.ndarray, values: np.ndarray) -> np.ndarray:
    ordered = np.sort(sample)
    return np.searchsorted(ordered, values, side="right") - np.searchsorted(
        ordered, values, side="left"
    )


def _merged_table(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """
    2 x bins contingency table, adjacent bins merged left to right until each
    column's smallest expected count reaches MIN_EXPECTED_COUNT
    """
    values = np.union1d(first, second)
    counts = np.vstack([_counts(first, values), _counts(second, values)])
    counts = counts.astype(float)
    total = counts.sum()
    row_share = counts.sum(axis=1).min() / total

    columns: List[np.ndarray] = []
    pending = np.zeros(2)
    for column in counts.T:
        pending = pending + column
        if pending.sum() * row_share >= MIN_EXPECTED_COUNT:
            columns.append(pending)
            pending = np.zeros(2)
    if pending.sum() > 0:
        if columns:
            columns[-1] = columns[-1] + pending
        else:
            columns.append(pending)
    return np.array(columns).T


def _two_sample_chi_square(
    first: np.ndarray, second: np.ndarray
) -> Dict[str, Union[float, int]]:
    table = _merged_table(first, second)
    if table.shape[1] < 2:
        return {"statistic": 0.0, "dof": 0, "p_value": 1.0, "threshold": 0.0}
    statistic, p_value, dof, _ = stats.chi2_contingency(table, correction=False)
    return {
        "statistic": float(statistic),
        "dof": int(dof),
        "p_value": float(p_value),
        "threshold": float(stats.chi2.ppf(LAW_TEST_LEVEL, dof)),
    }


def _fields(
    config: SimConfig, src: RandomSource, trials: np.ndarray
) -> OccupancyField:
    spec = config.env
    N = config.steps
    batch = src.for_trials(trials)
    init = sample_stationary(spec, batch)
    if config.is_discrete:
        return evolve_discrete(spec, batch, N, init)
    rows = [
        evolve_embedded(spec, src.for_trial(t), N, init[i]).rows
        for i, t in enumerate(trials)
    ]
    return OccupancyField(spec=spec, rows=np.stack(rows))


def backward_law_test(
    config: SimConfig,
    x: int,
    M: Optional[int] = None,
    compare_epsilon: Optional[float] = None,
) -> LawTestReport:
    """
    Compare X_hat_0 - x against the direct (-epsilon)-walk's X_N

    Parameters
    ----------
    config: SimConfig
        epsilon, environment, N and seed; in continuous mode the fields are the
        environment embedded at the walker's clock rings
    x: int
        the pinned endpoint, with the parity of N
    M: Optional[int] = None
        samples per side, config.trials when None
    compare_epsilon: Optional[float] = None
        bias of the direct walk, -epsilon when None (the law under test);
        +epsilon gives the negative control

    Returns
    -------
    LawTestReport
    """
    config.validate()
    N = config.steps
    _check_parity(x, N)
    M = config.trials if M is None else M
    target = -config.epsilon if compare_epsilon is None else compare_epsilon

    backward_src = RandomSource(derive_seed(config.seed, _BACKWARD_SAMPLE))
    direct_src = RandomSource(derive_seed(config.seed, _DIRECT_SAMPLE))
    backward = np.empty(M, dtype=np.int64)
    direct = np.empty(M, dtype=np.int64)
    for start in range(0, M, TRIAL_CHUNK):
        trials = np.arange(start, min(start + TRIAL_CHUNK, M))
        field = _fields(config, backward_src, trials)
        walk = backward_src.for_trials(trials)
        backward[trials] = run_backward(field, walk, x, N, config.epsilon).start - x

        field = _fields(config, direct_src, trials)
        walk = direct_src.for_trials(trials)
        direct[trials] = run_discrete(field, walk, 0, N, target).displacement
        logger.debug("law test: %d of %d pairs of samples", trials[-1] + 1, M)

    result = _two_sample_chi_square(backward, direct)
    report = LawTestReport(
        statistic=result["statistic"],
        threshold=result["threshold"],
        dof=result["dof"],
        p_value=result["p_value"],
        passed=result["statistic"] <= result["threshold"],
        backward_mean=float(backward.mean()),
        direct_mean=float(direct.mean()),
        trials=M,
    )
    logger.info(
        "backward law test eps=%g vs %g: chi2=%.3f threshold=%.3f dof=%d -> %s",
        config.epsilon,
        target,
        report.statistic,
        report.threshold,
        report.dof,
        "pass" if report.passed else "reject",
    )
    return report
