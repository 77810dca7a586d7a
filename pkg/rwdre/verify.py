"""
Acceptance suites

Each suite runs at desk scale by default; every parameter can be lowered for
quick checks. A suite returns its cases and passes only if all of them pass.
"""

__all__ = [
    "CaseResult",
    "SUITES",
    "SuiteResult",
    "anchors",
    "backward_law",
    "continuous_reduction",
    "detailed_balance",
    "mirror_asymmetry",
    "non_crossing",
    "oracle_antisymmetry",
    "oracle_consistency",
    "run_suite",
    "static_environment",
    "statistical_antisymmetry",
]

from dataclasses import asdict, dataclass, field
import inspect
import logging
import math
import numpy as np
from typing import Any, Callable, Dict, List, Optional, Sequence

from .coupling import backward_law_test, check_non_crossing, couple, gap_steps
from .environments import (
    EnvironmentKind,
    EnvironmentSpec,
    REVERSIBLE_KINDS,
    check_detailed_balance,
    mirror_asymmetry_stat,
    stationary_measure,
    transition_matrix,
    two_point_asymmetry,
)
from .estimators import (
    Regime,
    antisymmetry_test,
    clock_rate_check,
    embedded_speed_check,
    estimate_speed,
    exact_speed,
    mirror_invariance,
    static_env_solomon_check,
)
from .randomness import RandomSource, derive_seed
from .settings import (
    ACCEPTANCE_SIGMAS,
    BALANCE_TOLERANCE,
    DEFAULT_SEED,
    ORACLE_TOLERANCE,
)
from .walkers import SimConfig, TimeMode

logger = logging.getLogger(__name__)

EPSILONS = (0.1, 0.25, 0.4)
DENSITIES = (0.3, 0.7)
MIRRORED = (EnvironmentKind.EAST_RANDOM_SCAN, EnvironmentKind.WEST_RANDOM_SCAN)


@dataclass
class CaseResult:
    label: str
    passed: bool
    value: Optional[float] = None
    bound: Optional[float] = None


@dataclass
class SuiteResult:
    suite: str
    cases: List[CaseResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(case.passed for case in self.cases)

    @property
    def failures(self) -> List[CaseResult]:
        return [case for case in self.cases if not case.passed]

    def add(
        self,
        label: str,
        passed: bool,
        value: Optional[float] = None,
        bound: Optional[float] = None,
    ) -> CaseResult:
        case = CaseResult(label=label, passed=bool(passed), value=value, bound=bound)
        self.cases.append(case)
        logger.info(
            "%s | %s | value=%s bound=%s | %s",
            self.suite,
            label,
            "-" if value is None else f"{value:.6g}",
            "-" if bound is None else f"{bound:.6g}",
            "pass" if case.passed else "FAIL",
        )
        return case

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "failures": len(self.failures),
            "cases": [asdict(case) for case in self.cases],
        }


def _endpoints(count: int, N: int) -> np.ndarray:
    # spread over [-N, N] with the parity of N
    x = np.arange(count) % (2 * N + 1) - N
    return x - (x - N) % 2


def non_crossing(
    seed: int = DEFAULT_SEED,
    cases: int = 100_000,
    horizons: Sequence[int] = (16, 32, 64, 128, 256, 512),
    L: int = 16,
    p: float = 0.7,
) -> SuiteResult:
    """
    (X_hat_0 - X_0)(X_hat_N - X_N) >= 0 over the environment catalogue,
    epsilon in {+-0.1, +-0.25, +-0.4} and the given horizons
    """
    result = SuiteResult("non-crossing")
    kinds = [
        EnvironmentKind.FROZEN_BERNOULLI,
        EnvironmentKind.IID_REFRESH,
        EnvironmentKind.SSEP_RANDOM_SCAN,
        EnvironmentKind.EAST_RANDOM_SCAN,
    ]
    epsilons = [sign * e for e in EPSILONS for sign in (1, -1)]
    grid = [(k, e, N) for k in kinds for e in epsilons for N in horizons]
    batch = math.ceil(cases / len(grid))
    for index, (kind, epsilon, N) in enumerate(grid):
        spec = EnvironmentSpec(kind=kind, L=L, p=p)
        src = RandomSource(derive_seed(seed, index)).for_trials(np.arange(batch))
        pair = couple(spec, src, epsilon, N, _endpoints(batch, N))
        violations = int(np.sum(check_non_crossing(pair) < 0))
        bad_gaps = int(np.sum(~np.isin(gap_steps(pair), (-2, 0, 2))))
        result.add(
            f"{kind.value} eps={epsilon:+g} N={N}: {batch} pairs",
            violations == 0 and bad_gaps == 0,
            value=violations + bad_gaps,
            bound=0,
        )
    return result


def backward_law(
    seed: int = DEFAULT_SEED,
    L: int = 16,
    N: int = 256,
    M: int = 100_000,
    p: float = 0.7,
    epsilon: float = 0.25,
) -> SuiteResult:
    """
    X_hat_0 - x against the direct (-epsilon)-walk must pass the chi-square
    test; against the +epsilon walk it must be rejected
    """
    result = SuiteResult("backward-law")
    env = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=L, p=p)
    config = SimConfig(epsilon=epsilon, env=env, N=N, trials=M, seed=seed)
    x = N % 2
    law = backward_law_test(config, x)
    result.add(
        f"east L={L} N={N}: backward vs -eps walk",
        law.passed,
        value=law.statistic,
        bound=law.threshold,
    )
    control = backward_law_test(config, x, compare_epsilon=epsilon)
    result.add(
        f"east L={L} N={N}: backward vs +eps walk is rejected",
        not control.passed,
        value=control.statistic,
        bound=control.threshold,
    )
    return result


def detailed_balance(sizes: Sequence[int] = (2, 3, 4, 5, 6)) -> SuiteResult:
    """
    Every reversible kernel balances against its stationary measure to 1e-12;
    the tasep control does not
    """
    result = SuiteResult("detailed-balance")
    for kind in sorted(REVERSIBLE_KINDS, key=lambda k: k.value):
        for L in sizes:
            for p in DENSITIES:
                for substeps in sorted({1, L}):
                    spec = EnvironmentSpec(kind=kind, L=L, p=p, substeps_k=substeps)
                    violation = check_detailed_balance(
                        transition_matrix(spec), stationary_measure(spec)
                    )
                    result.add(
                        f"{kind.value} L={L} p={p} k={substeps}",
                        violation <= BALANCE_TOLERANCE,
                        value=violation,
                        bound=BALANCE_TOLERANCE,
                    )
    control = EnvironmentSpec(kind=EnvironmentKind.TASEP_RANDOM_SCAN, L=4, p=0.5)
    violation = check_detailed_balance(
        transition_matrix(control), stationary_measure(control)
    )
    result.add(
        "tasep-random-scan L=4 p=0.5 is not reversible",
        violation > 1e-6,
        value=violation,
    )
    return result


def oracle_antisymmetry(sizes: Sequence[int] = (3, 4, 5, 6)) -> SuiteResult:
    """
    |v(eps) + v(-eps)| <= 1e-10 from the joint-chain oracle, with the
    stationary residual, the mirror invariance of ssep and iid-refresh, the
    memoryless closed form and v_west(eps) = v_east(eps): a reversible
    environment and its mirror image give the same speed
    """
    result = SuiteResult("oracle-antisymmetry")
    kinds = [
        EnvironmentKind.EAST_RANDOM_SCAN,
        EnvironmentKind.SSEP_RANDOM_SCAN,
        EnvironmentKind.IID_REFRESH,
    ]
    for kind in kinds:
        for L in sizes:
            for p in DENSITIES:
                for epsilon in EPSILONS:
                    for substeps in sorted({1, L}):
                        env = EnvironmentSpec(kind=kind, L=L, p=p, substeps_k=substeps)
                        plus = exact_speed(env, epsilon)
                        minus = exact_speed(env, -epsilon)
                        total = abs(plus.exact_speed + minus.exact_speed)
                        residual = max(plus.residual, minus.residual)
                        result.add(
                            f"{kind.value} L={L} p={p} eps={epsilon} k={substeps}",
                            total <= ORACLE_TOLERANCE and residual <= ORACLE_TOLERANCE,
                            value=total,
                            bound=ORACLE_TOLERANCE,
                        )
    for L in sizes:
        for p in DENSITIES:
            for epsilon in EPSILONS:
                for substeps in sorted({1, L}):
                    east, west = (
                        EnvironmentSpec(kind, L, p, substeps) for kind in MIRRORED
                    )
                    gap = abs(
                        exact_speed(west, epsilon).exact_speed
                        - exact_speed(east, epsilon).exact_speed
                    )
                    result.add(
                        f"west vs east L={L} p={p} eps={epsilon} k={substeps}",
                        gap <= ORACLE_TOLERANCE,
                        value=gap,
                        bound=ORACLE_TOLERANCE,
                    )
    for kind in (EnvironmentKind.SSEP_RANDOM_SCAN, EnvironmentKind.IID_REFRESH):
        env = EnvironmentSpec(kind=kind, L=4, p=0.7)
        residual = mirror_invariance(env, 0.25)
        result.add(
            f"{kind.value} L=4 mirror invariance",
            residual <= ORACLE_TOLERANCE,
            value=residual,
            bound=ORACLE_TOLERANCE,
        )
    memoryless = exact_speed(
        EnvironmentSpec(kind=EnvironmentKind.IID_REFRESH, L=4, p=0.7), 0.25
    )
    error = abs(memoryless.exact_speed - 0.2)
    result.add(
        "iid-refresh L=4 p=0.7 eps=0.25 equals 2 eps (2p - 1)",
        error <= ORACLE_TOLERANCE,
        value=error,
        bound=ORACLE_TOLERANCE,
    )
    return result


def continuous_reduction(
    seed: int = DEFAULT_SEED,
    clock_rings: int = 1_000_000,
    horizon: float = 200.0,
    trials: int = 1_000,
    law_N: int = 32,
    law_M: int = 5_000,
) -> SuiteResult:
    """
    T_n / n -> 1, embedded and continuous speeds agree, and the embedded
    environment passes the backward-law test
    """
    result = SuiteResult("continuous-reduction")
    clock = clock_rate_check(seed, clock_rings)
    result.add(
        f"|T_n / n - 1| at n={clock_rings}",
        clock.passed,
        value=clock.deviation,
        bound=clock.tolerance,
    )

    env = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=16, p=0.7)
    config = SimConfig(
        epsilon=0.25,
        env=env,
        N=horizon,
        trials=trials,
        seed=seed,
        time_mode=TimeMode.CONTINUOUS,
    )
    speeds = embedded_speed_check(config)
    result.add(
        f"embedded vs continuous speed, t={horizon:g}",
        speeds.passed,
        value=abs(speeds.difference),
        bound=ACCEPTANCE_SIGMAS * speeds.paired_se,
    )

    law_env = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=8, p=0.7)
    law_config = SimConfig(
        epsilon=0.25,
        env=law_env,
        N=law_N,
        trials=law_M,
        seed=derive_seed(seed, 1),
        time_mode=TimeMode.CONTINUOUS,
    )
    law = backward_law_test(law_config, law_N % 2)
    result.add(
        f"embedded east L=8 N={law_N}: backward vs -eps walk",
        law.passed,
        value=law.statistic,
        bound=law.threshold,
    )
    return result


def mirror_asymmetry() -> SuiteResult:
    """
    East at L=5, p=0.7, lag 1 has the pinned nonzero mirror statistic and West
    its negative, while ssep and iid-refresh give zero; the two-point asymmetry
    vanishes for all
    """
    result = SuiteResult("mirror-asymmetry")
    L, p = 5, 0.7
    east = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=L, p=p)
    expected = -2 * p**2 * (1 - p) ** 2 / (L * (1 - p**L))
    value = mirror_asymmetry_stat(east, 1)
    result.add(
        "east L=5 p=0.7 lag=1 mirror statistic",
        abs(value - expected) <= BALANCE_TOLERANCE and value != 0.0,
        value=value,
        bound=expected,
    )
    west = EnvironmentSpec(kind=EnvironmentKind.WEST_RANDOM_SCAN, L=L, p=p)
    value = mirror_asymmetry_stat(west, 1)
    result.add(
        "west L=5 p=0.7 lag=1 mirror statistic is the reflected east one",
        abs(value + expected) <= BALANCE_TOLERANCE,
        value=value,
        bound=-expected,
    )
    for kind in (EnvironmentKind.SSEP_RANDOM_SCAN, EnvironmentKind.IID_REFRESH):
        spec = EnvironmentSpec(kind=kind, L=L, p=p)
        value = abs(mirror_asymmetry_stat(spec, 1))
        result.add(
            f"{kind.value} L=5 mirror statistic vanishes",
            value <= BALANCE_TOLERANCE,
            value=value,
            bound=BALANCE_TOLERANCE,
        )
    ssep = EnvironmentSpec(kind=EnvironmentKind.SSEP_RANDOM_SCAN, L=L, p=p)
    for spec in (east, ssep):
        value = abs(two_point_asymmetry(spec, 1))
        result.add(
            f"{spec.kind.value} L=5 two-point asymmetry vanishes",
            value <= BALANCE_TOLERANCE,
            value=value,
            bound=BALANCE_TOLERANCE,
        )
    return result


def static_environment(
    seed: int = DEFAULT_SEED,
    N: int = 10_000,
    M: int = 10_000,
    workers: int = 1,
) -> SuiteResult:
    """
    The walk in a frozen field on the whole lattice matches its closed-form
    speed and is antisymmetric; p=0.8, eps=0.35 is recognised as zero-speed
    """
    result = SuiteResult("static-environment")
    report = static_env_solomon_check(0.98, 0.35, N, M, seed, workers)
    result.add(
        "p=0.98 eps=0.35 speed against the closed form",
        bool(report.speed_passed),
        value=report.v_plus.mean,
        bound=report.closed_form,
    )
    result.add(
        "p=0.98 eps=0.35 v(eps) + v(-eps)",
        bool(report.antisymmetry_passed),
        value=report.sum,
        bound=ACCEPTANCE_SIGMAS * report.sum_se,
    )
    zero = static_env_solomon_check(0.8, 0.35, N, M, seed, workers)
    result.add(
        "p=0.8 eps=0.35 is in the zero-speed regime",
        zero.regime is Regime.ZERO_SPEED,
        value=zero.expected_rho,
        bound=1.0,
    )
    return result


def oracle_consistency(
    seed: int = DEFAULT_SEED,
    N: int = 10_000,
    M: int = 10_000,
    workers: int = 1,
) -> SuiteResult:
    """Monte Carlo speed of east L=6 against the oracle"""
    result = SuiteResult("oracle-consistency")
    env = EnvironmentSpec(
        kind=EnvironmentKind.EAST_RANDOM_SCAN, L=6, p=0.7, substeps_k=6
    )
    config = SimConfig(epsilon=0.25, env=env, N=N, trials=M, seed=seed)
    exact = exact_speed(env, 0.25).exact_speed
    estimate = estimate_speed(config, workers)
    result.add(
        f"east L=6 p=0.7 eps=0.25 k=6 N={N} M={M}",
        estimate.within(exact),
        value=estimate.mean,
        bound=exact,
    )
    return result


def statistical_antisymmetry(
    seed: int = DEFAULT_SEED,
    L: int = 64,
    N: int = 10_000,
    M: int = 10_000,
    workers: int = 1,
) -> SuiteResult:
    """v(eps) + v(-eps) for east beyond the oracle's reach"""
    result = SuiteResult("statistical-antisymmetry")
    env = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=L, p=0.7)
    config = SimConfig(epsilon=0.25, env=env, N=N, trials=M, seed=seed)
    report = antisymmetry_test(config, workers=workers)
    result.add(
        f"east L={L} p=0.7 eps=0.25 N={N} M={M}",
        report.passed,
        value=report.sum,
        bound=ACCEPTANCE_SIGMAS * report.sum_se,
    )
    return result


def anchors(
    seed: int = DEFAULT_SEED,
    N: int = 1_000,
    M: int = 1_000,
    workers: int = 1,
) -> SuiteResult:
    """The symmetric walk has speed 0; on an all-ones frozen field it is 2 eps"""
    result = SuiteResult("anchors")
    env = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=16, p=0.7)
    symmetric = estimate_speed(
        SimConfig(epsilon=0.0, env=env, N=N, trials=M, seed=seed), workers
    )
    result.add(
        "eps=0 interval contains 0",
        symmetric.contains(0.0),
        value=symmetric.mean,
        bound=symmetric.ci_high,
    )
    epsilon = 0.3
    ones = EnvironmentSpec(kind=EnvironmentKind.FROZEN_BERNOULLI, L=16, p=1.0)
    drift = estimate_speed(
        SimConfig(epsilon=epsilon, env=ones, N=N, trials=M, seed=seed), workers
    )
    band = ACCEPTANCE_SIGMAS * math.sqrt((1 - 4 * epsilon**2) / (N * M))
    result.add(
        "frozen all-ones eps=0.3 drifts at 2 eps",
        abs(drift.mean - 2 * epsilon) <= band,
        value=drift.mean,
        bound=2 * epsilon,
    )
    return result


SUITES: Dict[str, Callable[..., SuiteResult]] = {
    "non-crossing": non_crossing,
    "backward-law": backward_law,
    "detailed-balance": detailed_balance,
    "oracle-antisymmetry": oracle_antisymmetry,
    "continuous-reduction": continuous_reduction,
    "mirror-asymmetry": mirror_asymmetry,
    "static-environment": static_environment,
    "oracle-consistency": oracle_consistency,
    "statistical-antisymmetry": statistical_antisymmetry,
    "anchors": anchors,
}


def _shared(suite: Callable[..., SuiteResult], seed: int, workers: int) -> Dict:
    # deterministic suites take no seed, serial ones no workers
    accepted = inspect.signature(suite).parameters
    shared = {"seed": seed, "workers": workers}
    return {k: v for k, v in shared.items() if k in accepted}


def run_suite(
    name: str, seed: int = DEFAULT_SEED, workers: int = 1, **overrides: Any
) -> SuiteResult:
    """
    Run a suite by name; "all" runs every suite into one result

    Raises
    ------
    KeyError
        for an unknown suite
    """
    if name == "all":
        combined = SuiteResult("all")
        for suite in SUITES.values():
            combined.cases.extend(suite(**_shared(suite, seed, workers)).cases)
        return combined
    if name not in SUITES:
        raise KeyError(name)
    suite = SUITES[name]
    result = suite(**_shared(suite, seed, workers), **overrides)
    logger.info(
        "%s: %d cases, %d failed",
        name,
        len(result.cases),
        len(result.failures),
    )
    return result
