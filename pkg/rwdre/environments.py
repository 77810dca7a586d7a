"""
Dynamic environments on a ring of L sites

The walker reads the ring through x mod L. Every kernel here is translation
invariant; all catalogued kinds except the tasep control are reversible with
respect to a product Bernoulli measure (conditioned on not all-ones for the
East and West constrained kinds). West is East reflected through the origin:
a site may resample only while its left neighbour is empty.
"""

__all__ = [
    "EnvironmentKind",
    "EnvironmentSpec",
    "OccupancyField",
    "REVERSIBLE_KINDS",
    "admissible_states",
    "apply_event",
    "apply_rule",
    "check_detailed_balance",
    "evolve_discrete",
    "mirror_asymmetry_stat",
    "sample_stationary",
    "state_bits",
    "stationary_measure",
    "step_kernel",
    "sub_update",
    "transition_matrix",
    "two_point_asymmetry",
]

from dataclasses import dataclass
from enum import Enum
import logging
import numpy as np
from typing import Any, Dict, Tuple

from .errors import CapacityError, ConfigError
from .randomness import RandomSource, StreamTag
from .settings import (
    BALANCE_TOLERANCE,
    DEFAULT_SUBSTEPS,
    MAX_KERNEL_SITES,
    MAX_MIRROR_SITES,
)

logger = logging.getLogger(__name__)


class EnvironmentKind(str, Enum):
    FROZEN_BERNOULLI = "frozen-bernoulli"
    IID_REFRESH = "iid-refresh"
    SSEP_RANDOM_SCAN = "ssep-random-scan"
    EAST_RANDOM_SCAN = "east-random-scan"
    WEST_RANDOM_SCAN = "west-random-scan"
    # non-reversible control, refused by experiment configs
    TASEP_RANDOM_SCAN = "tasep-random-scan"


REVERSIBLE_KINDS = frozenset(
    {
        EnvironmentKind.FROZEN_BERNOULLI,
        EnvironmentKind.IID_REFRESH,
        EnvironmentKind.SSEP_RANDOM_SCAN,
        EnvironmentKind.EAST_RANDOM_SCAN,
        EnvironmentKind.WEST_RANDOM_SCAN,
    }
)

CONSTRAINED_KINDS = frozenset(
    {EnvironmentKind.EAST_RANDOM_SCAN, EnvironmentKind.WEST_RANDOM_SCAN}
)


@dataclass(frozen=True)
class EnvironmentSpec:
    """
    Which environment to run and with what parameters

    Parameters
    ----------
    kind: EnvironmentKind
        the dynamics, a member or its string value
    L: int
        ring size, at least 2
    p: float
        occupation density in [0, 1]
    substeps_k: int = 1
        random-scan kernel applications per walker time step

    Methods
    -------
    validate(allow_irreversible: bool = False) -> EnvironmentSpec
        raises ConfigError on an invalid spec, returns self otherwise
    to_dict() -> Dict[str, Any]
        the JSON object {kind, L, p, substeps_k}
    from_dict(data: Dict[str, Any]) -> EnvironmentSpec
        the inverse of to_dict
    """

    kind: EnvironmentKind
    L: int
    p: float
    substeps_k: int = DEFAULT_SUBSTEPS

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "kind", EnvironmentKind(self.kind))
        except ValueError:
            known = ", ".join(k.value for k in EnvironmentKind)
            raise ConfigError("kind", f"unknown environment {self.kind!r}", known)

    @property
    def is_constrained(self) -> bool:
        """East or West: the all-ones state is frozen and excluded"""
        return self.kind in CONSTRAINED_KINDS

    @property
    def is_reversible(self) -> bool:
        return self.kind in REVERSIBLE_KINDS

    @property
    def substeps(self) -> int:
        """
        Sub-updates actually applied per step
        iid-refresh already resamples every site, so it always uses one
        """
        if self.kind is EnvironmentKind.IID_REFRESH:
            return 1
        return self.substeps_k

    def validate(self, allow_irreversible: bool = False) -> "EnvironmentSpec":
        if int(self.L) != self.L or self.L < 2:
            raise ConfigError("L", f"ring size must be an integer >= 2, got {self.L}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p", f"density must lie in [0, 1], got {self.p}")
        if int(self.substeps_k) != self.substeps_k or self.substeps_k < 1:
            raise ConfigError(
                "substeps_k", f"must be a positive integer, got {self.substeps_k}"
            )
        if self.is_constrained and self.p == 1.0:
            raise ConfigError(
                "p",
                f"{self.kind.value} needs p < 1",
                "the stationary measure is conditioned on not all-ones",
            )
        if not (allow_irreversible or self.is_reversible):
            raise ConfigError(
                "kind",
                f"{self.kind.value} is not reversible",
                "speed antisymmetry is only guaranteed for reversible environments",
            )
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "L": int(self.L),
            "p": float(self.p),
            "substeps_k": int(self.substeps_k),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "EnvironmentSpec":
        missing = {"kind", "L", "p"} - set(data)
        if missing:
            raise ConfigError(sorted(missing)[0], "missing from environment config")
        return cls(
            kind=data["kind"],
            L=int(data["L"]),
            p=float(data["p"]),
            substeps_k=int(data.get("substeps_k", DEFAULT_SUBSTEPS)),
        )


@dataclass(frozen=True, eq=False)
class OccupancyField:
    """
    A space-time window of environment values

    Attributes
    ----------
    spec: EnvironmentSpec
        the environment that produced the rows
    rows: np.ndarray
        uint8 bits, shape (N+1, L), or (M, N+1, L) for M trials at once
        row n is the configuration at time n
    """

    spec: EnvironmentSpec
    rows: np.ndarray

    @property
    def horizon(self) -> int:
        return self.rows.shape[-2] - 1

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.rows.shape[:-2]

    def at(self, n: int, x: Any) -> Any:
        """eta_n(x), with x read modulo L; x matches the batch shape"""
        x = np.mod(x, self.spec.L)
        if self.rows.ndim == 2:
            return self.rows[n, x]
        return self.rows[np.arange(self.rows.shape[0]), n, x]


def state_bits(L: int) -> np.ndarray:
    """All 2^L configurations, row a holds the bits of a with site i = bit i"""
    index = np.arange(2**L)[:, None]
    return ((index >> np.arange(L)) & 1).astype(np.uint8)


def admissible_states(spec: EnvironmentSpec) -> np.ndarray:
    """State indices of the environment's state space"""
    states = np.arange(2**spec.L)
    if spec.is_constrained:
        return states[:-1]
    return states


def stationary_measure(spec: EnvironmentSpec) -> np.ndarray:
    """
    Product Bernoulli(p) over all 2^L states
    For East and West the all-ones state gets no mass and the rest is
    renormalized
    """
    bits = state_bits(spec.L)
    pi = np.prod(np.where(bits == 1, spec.p, 1.0 - spec.p), axis=1)
    if spec.is_constrained:
        pi[-1] = 0.0
    return pi / pi.sum()


def sample_stationary(spec: EnvironmentSpec, src: RandomSource) -> np.ndarray:
    """
    Draw an initial configuration from the stationary measure

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment
    src: RandomSource
        its trial coordinate sets the batch shape; the INITIAL stream is used

    Returns
    -------
    np.ndarray
        uint8 bits of shape batch_shape + (L,), iid Bernoulli(p); East and West
        rows are redrawn until they are not all-ones
    """
    spec.validate(allow_irreversible=True)
    draw = src.stream(StreamTag.INITIAL).columns()
    sites = np.arange(spec.L)
    config = (draw.uniform(0, sites) < spec.p).astype(np.uint8)
    if not spec.is_constrained:
        return config

    attempt = 0
    blocked = config.all(axis=-1)
    while np.any(blocked):
        attempt += 1
        redraw = (draw.uniform(attempt, sites) < spec.p).astype(np.uint8)
        config = np.where(blocked[..., None], redraw, config)
        blocked = config.all(axis=-1)
    if attempt:
        logger.debug("constrained initial condition needed %d redraws", attempt)
    return config


def apply_rule(
    spec: EnvironmentSpec, flat: np.ndarray, site: np.ndarray, coin: np.ndarray
) -> None:
    """
    Apply one local update in place

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment
    flat: np.ndarray
        configurations, shape (M, L)
    site: np.ndarray
        chosen site (or left end of the chosen edge) per row
    coin: np.ndarray
        a uniform per row deciding the outcome
    """
    L = spec.L
    rows = np.arange(flat.shape[0])
    right = (site + 1) % L
    left = (site - 1) % L
    kind = spec.kind

    if kind is EnvironmentKind.FROZEN_BERNOULLI:
        return
    if kind is EnvironmentKind.IID_REFRESH:
        flat[rows, site] = coin < spec.p
    elif kind is EnvironmentKind.EAST_RANDOM_SCAN:
        free = flat[rows, right] == 0
        flat[rows, site] = np.where(free, coin < spec.p, flat[rows, site])
    elif kind is EnvironmentKind.WEST_RANDOM_SCAN:
        free = flat[rows, left] == 0
        flat[rows, site] = np.where(free, coin < spec.p, flat[rows, site])
    elif kind is EnvironmentKind.SSEP_RANDOM_SCAN:
        swap = coin < 0.5
        a, b = flat[rows, site], flat[rows, right]
        flat[rows, site] = np.where(swap, b, a)
        flat[rows, right] = np.where(swap, a, b)
    elif kind is EnvironmentKind.TASEP_RANDOM_SCAN:
        hop = (coin < 0.5) & (flat[rows, site] == 1) & (flat[rows, right] == 0)
        flat[rows, site] = np.where(hop, 0, flat[rows, site])
        flat[rows, right] = np.where(hop, 1, flat[rows, right])
    else:
        raise ValueError(f"no update rule for {kind}")


def apply_event(
    spec: EnvironmentSpec, config: bytearray, site: int, coin: float
) -> None:
    """
    apply_rule for a single configuration held in a bytearray
    Used by the event-driven continuous-time engine
    """
    kind = spec.kind
    right = (site + 1) % spec.L
    if kind is EnvironmentKind.IID_REFRESH:
        config[site] = coin < spec.p
    elif kind is EnvironmentKind.EAST_RANDOM_SCAN:
        if not config[right]:
            config[site] = coin < spec.p
    elif kind is EnvironmentKind.WEST_RANDOM_SCAN:
        if not config[(site - 1) % spec.L]:
            config[site] = coin < spec.p
    elif kind is EnvironmentKind.SSEP_RANDOM_SCAN:
        if coin < 0.5:
            config[site], config[right] = config[right], config[site]
    elif kind is EnvironmentKind.TASEP_RANDOM_SCAN:
        if coin < 0.5 and config[site] and not config[right]:
            config[site], config[right] = 0, 1


def sub_update(
    spec: EnvironmentSpec, config: np.ndarray, src: RandomSource, n: int, j: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One random-scan sub-update, j-th of step n

    Returns
    -------
    Tuple[np.ndarray, np.ndarray]
        the new configuration and the site that was picked
    """
    L = spec.L
    draw = src.stream(StreamTag.ENVIRONMENT)
    flat = np.array(config, dtype=np.uint8).reshape(-1, L)
    site = (np.asarray(draw.uniform(n, j, 0)) * L).astype(np.int64)
    site = np.minimum(site, L - 1)
    coin = np.asarray(draw.uniform(n, j, 1))
    site = np.broadcast_to(site, flat.shape[:1]).copy()
    coin = np.broadcast_to(coin, flat.shape[:1])
    apply_rule(spec, flat, site, coin)
    return flat.reshape(np.shape(config)), site.reshape(np.shape(config)[:-1])


def step_kernel(
    spec: EnvironmentSpec, config: np.ndarray, src: RandomSource, n: int
) -> np.ndarray:
    """
    Advance configurations by one walker time step

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment
    config: np.ndarray
        uint8 bits, shape (L,) or (M, L) matching src's trial shape
    src: RandomSource
        the ENVIRONMENT stream is used
    n: int
        the step index

    Returns
    -------
    np.ndarray
        the configuration after spec.substeps sub-updates
        (iid-refresh resamples every site once)
    """
    if spec.kind is EnvironmentKind.FROZEN_BERNOULLI:
        return np.array(config, dtype=np.uint8)
    if spec.kind is EnvironmentKind.IID_REFRESH:
        draw = src.stream(StreamTag.ENVIRONMENT).columns()
        fresh = draw.uniform(n, 0, 2 + np.arange(spec.L)) < spec.p
        return np.broadcast_to(fresh, np.shape(config)).astype(np.uint8)

    for j in range(spec.substeps):
        config, _ = sub_update(spec, config, src, n, j)
    return config


def evolve_discrete(
    spec: EnvironmentSpec, src: RandomSource, N: int, init: np.ndarray
) -> OccupancyField:
    """
    Run the environment for N steps from init

    Returns
    -------
    OccupancyField
        rows[0] = init, rows[n+1] = step_kernel(rows[n], n)
    """
    if N < 0:
        raise ValueError(f"horizon must be non-negative, got {N}")
    init = np.asarray(init, dtype=np.uint8)
    rows = np.empty(init.shape[:-1] + (N + 1, spec.L), dtype=np.uint8)
    config = init
    rows[..., 0, :] = config
    for n in range(N):
        config = step_kernel(spec, config, src, n)
        rows[..., n + 1, :] = config
    return OccupancyField(spec=spec, rows=rows)


def _sub_update_matrix(spec: EnvironmentSpec) -> np.ndarray:
    L = spec.L
    size = 2**L
    bits = state_bits(L)
    index = np.arange(size)
    S = np.zeros((size, size))
    w = 1.0 / L

    for x in range(L):
        right = (x + 1) % L
        up = index | (1 << x)
        down = index & ~(1 << x)
        if spec.is_constrained:
            blocker = right if spec.kind is EnvironmentKind.EAST_RANDOM_SCAN else x - 1
            free = bits[:, blocker] == 0
            np.add.at(S, (index[free], up[free]), w * spec.p)
            np.add.at(S, (index[free], down[free]), w * (1.0 - spec.p))
            np.add.at(S, (index[~free], index[~free]), w)
        elif spec.kind is EnvironmentKind.SSEP_RANDOM_SCAN:
            differ = bits[:, x] != bits[:, right]
            swapped = np.where(differ, index ^ ((1 << x) | (1 << right)), index)
            np.add.at(S, (index, swapped), 0.5 * w)
            np.add.at(S, (index, index), 0.5 * w)
        elif spec.kind is EnvironmentKind.TASEP_RANDOM_SCAN:
            hop = (bits[:, x] == 1) & (bits[:, right] == 0)
            moved = np.where(hop, index ^ ((1 << x) | (1 << right)), index)
            np.add.at(S, (index, moved), 0.5 * w)
            np.add.at(S, (index, index), 0.5 * w)
        else:
            raise ValueError(f"no sub-update matrix for {spec.kind}")
    return S


def transition_matrix(spec: EnvironmentSpec) -> np.ndarray:
    """
    The exact one-step kernel over all 2^L configurations

    For East and West the all-ones state is isolated and its row is the
    identity.

    Raises
    ------
    CapacityError
        when L exceeds settings.MAX_KERNEL_SITES
    """
    spec.validate(allow_irreversible=True)
    if spec.L > MAX_KERNEL_SITES:
        raise CapacityError(
            f"transition matrix needs L <= {MAX_KERNEL_SITES}, got {spec.L}"
        )
    size = 2**spec.L
    if spec.kind is EnvironmentKind.FROZEN_BERNOULLI:
        return np.eye(size)
    if spec.kind is EnvironmentKind.IID_REFRESH:
        return np.tile(stationary_measure(spec), (size, 1))
    return np.linalg.matrix_power(_sub_update_matrix(spec), spec.substeps)


def check_detailed_balance(kernel: np.ndarray, pi: np.ndarray) -> float:
    """
    max over (a, b) of |pi[a] K[a, b] - pi[b] K[b, a]|
    """
    kernel = np.asarray(kernel, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ValueError(f"kernel must be square, got shape {kernel.shape}")
    if pi.shape != kernel.shape[:1]:
        raise ValueError(
            f"pi has shape {pi.shape} but the kernel has {kernel.shape[0]} states"
        )
    if abs(pi.sum() - 1.0) > BALANCE_TOLERANCE:
        raise ValueError(f"pi must sum to 1, sums to {pi.sum()!r}")
    flux = pi[:, None] * kernel
    return float(np.max(np.abs(flux - flux.T)))


def _exact_power(spec: EnvironmentSpec, lag: int) -> Tuple[np.ndarray, np.ndarray]:
    if lag < 1:
        raise ValueError(f"lag must be positive, got {lag}")
    if spec.L > MAX_MIRROR_SITES:
        raise CapacityError(
            f"exact mirror statistics need L <= {MAX_MIRROR_SITES}, got {spec.L}"
        )
    return stationary_measure(spec), np.linalg.matrix_power(
        transition_matrix(spec), lag
    )


def two_point_asymmetry(spec: EnvironmentSpec, lag: int) -> float:
    """
    c+ - c- with c(+/-) = E[eta_0(x) eta_lag(x +/- 1)] under stationarity

    Vanishes for every reversible translation-invariant kernel, since time
    reversal followed by a shift exchanges the two correlations.
    """
    pi, power = _exact_power(spec, lag)
    bits = state_bits(spec.L).astype(float)
    left = pi * bits[:, 0]
    c_plus = left @ power @ bits[:, 1 % spec.L]
    c_minus = left @ power @ bits[:, -1]
    return float(c_plus - c_minus)


def mirror_asymmetry_stat(spec: EnvironmentSpec, lag: int) -> float:
    """
    d+ - d- with d(+/-) = P(eta_0(x +/- 1) = 1 and eta_lag(x) != eta_0(x))

    How much more a site moves next to an occupied right neighbour than next to
    an occupied left one; nonzero certifies a lack of mirror symmetry.

    Parameters
    ----------
    spec: EnvironmentSpec
        the environment, L <= settings.MAX_MIRROR_SITES
    lag: int
        time lag in walker steps

    Returns
    -------
    float
        exact value from the stationary measure and the lag-th kernel power
    """
    pi, power = _exact_power(spec, lag)
    bits = state_bits(spec.L)
    changed = (bits[:, 0][:, None] != bits[:, 0][None, :]).astype(float)
    activity = (power * changed).sum(axis=1)
    d_plus = np.sum(pi * bits[:, 1 % spec.L] * activity)
    d_minus = np.sum(pi * bits[:, -1] * activity)
    return float(d_plus - d_minus)
