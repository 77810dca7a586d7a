"""
Coordinate-addressable randomness

Every random number used by the lab is a pure function of
(master seed, stream tag, trial, coordinates...). There is no generator state:
the direction field, the environment updates and the Poisson clocks can be read
in any order, from any worker, and always give the same bits.
"""

__all__ = [
    "RandomSource",
    "StreamTag",
    "arrival_blocks",
    "derive_seed",
    "hash_words",
    "poisson_arrivals",
    "poisson_times",
    "uniform_at",
    "walk_uniform",
]

from dataclasses import dataclass, replace
from enum import IntEnum
import numpy as np
from typing import Iterator, Tuple, Union

Coordinate = Union[int, np.ndarray]

MASK_64: int = 0xFFFFFFFFFFFFFFFF

# SplitMix64 constants
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_SHIFT_30 = np.uint64(30)
_SHIFT_27 = np.uint64(27)
_SHIFT_31 = np.uint64(31)
_SHIFT_11 = np.uint64(11)
_UNIT: float = 2.0**-53

# arrival times are summed in blocks of this size
_ARRIVAL_BLOCK: int = 4096


class StreamTag(IntEnum):
    ENVIRONMENT = 1
    WALK = 2
    POISSON = 3
    INITIAL = 4
    ENVIRONMENT_CLOCK = 5


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z = (z ^ (z >> _SHIFT_30)) * _MIX_A
    z = (z ^ (z >> _SHIFT_27)) * _MIX_B
    return z ^ (z >> _SHIFT_31)


def _as_words(value: Coordinate) -> np.ndarray:
    # negative coordinates wrap to their two's complement
    return np.asarray(value, dtype=np.int64).astype(np.uint64)


def hash_words(seed: int, tag: int, *coords: Coordinate) -> np.ndarray:
    """
    The keyed 64-bit hash behind every draw

    Parameters
    ----------
    seed: int
        the 64-bit master seed
    tag: int
        the stream tag
    *coords: Coordinate
        integer coordinates, scalars or broadcastable arrays

    Returns
    -------
    np.ndarray
        uint64 words, shaped as the broadcast of the coordinates
    """
    with np.errstate(over="ignore"):
        h = np.asarray(int(seed) & MASK_64, dtype=np.uint64)
        h = _splitmix(h ^ (np.uint64(int(tag)) * _GOLDEN))
        for c in coords:
            h = _splitmix(h ^ _as_words(c))
    return h


def _to_unit(words: np.ndarray) -> Union[float, np.ndarray]:
    u = (words >> _SHIFT_11).astype(np.float64) * _UNIT
    return u if u.ndim else float(u)


def derive_seed(seed: int, *path: int) -> int:
    """
    A child seed, independent of the parent stream, for a sub-experiment
    """
    return int(hash_words(seed, 0, *path))


@dataclass(frozen=True, eq=False)
class RandomSource:
    """
    A handle on one stream of the coordinate-addressed random field

    Parameters
    ----------
    master_seed: int
        the 64-bit experiment seed
    stream_tag: StreamTag = StreamTag.WALK
        which stream the draws come from
    trial: Coordinate = 0
        the trial index, or an integer array of indices for vectorized ensembles
    offset: int = 0
        site shift applied by uniform_at, for rotation-matched sources

    Methods
    -------
    stream(tag: StreamTag) -> RandomSource
        the same source reading another stream
    for_trials(trials) -> RandomSource
        the same source addressed to an array of trials
    shifted(shift: int) -> RandomSource
        a source whose site coordinates are moved by shift
    columns() -> RandomSource
        the trial axis made broadcastable against a trailing site axis
    uniform(*coords) -> float or np.ndarray
        draws in [0, 1)
    open_uniform(*coords) -> float or np.ndarray
        draws in (0, 1)
    """

    master_seed: int
    stream_tag: StreamTag = StreamTag.WALK
    trial: Coordinate = 0
    offset: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "master_seed", int(self.master_seed) & MASK_64)
        object.__setattr__(self, "stream_tag", StreamTag(self.stream_tag))

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return np.shape(self.trial)

    def stream(self, tag: StreamTag) -> "RandomSource":
        return replace(self, stream_tag=tag)

    def for_trials(self, trials: Coordinate) -> "RandomSource":
        return replace(self, trial=np.asarray(trials, dtype=np.int64))

    def for_trial(self, trial: int) -> "RandomSource":
        return replace(self, trial=int(trial))

    def shifted(self, shift: int) -> "RandomSource":
        return replace(self, offset=self.offset + int(shift))

    def columns(self) -> "RandomSource":
        return replace(self, trial=np.asarray(self.trial)[..., None])

    def words(self, *coords: Coordinate) -> np.ndarray:
        return hash_words(self.master_seed, self.stream_tag, self.trial, *coords)

    def uniform(self, *coords: Coordinate) -> Union[float, np.ndarray]:
        return _to_unit(self.words(*coords))

    def open_uniform(self, *coords: Coordinate) -> Union[float, np.ndarray]:
        u = ((self.words(*coords) >> _SHIFT_11).astype(np.float64) + 0.5) * _UNIT
        return u if u.ndim else float(u)


def uniform_at(
    src: RandomSource, x: Coordinate, n: Coordinate
) -> Union[float, np.ndarray]:
    """
    U_{x,n}: the uniform attached to lattice site x at time step n

    x is the unwrapped lattice coordinate; negative sites are fine.
    """
    return src.uniform(np.asarray(x) - src.offset, n)


def walk_uniform(src: RandomSource, n: Coordinate) -> Union[float, np.ndarray]:
    """
    U_n: the uniform attached to the n-th walker clock ring
    """
    return src.uniform(n)


def arrival_blocks(
    src: RandomSource, rate: float = 1.0
) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Arrival times of a Poisson process, block after block

    Gaps are summed left to right across blocks, so every consumer of the same
    stream sees bit-identical times.

    Yields
    ------
    Tuple[int, np.ndarray]
        the index of the first arrival in the block and the block's times
    """
    last = 0.0
    start = 0
    while True:
        gaps = -np.log(src.open_uniform(np.arange(start, start + _ARRIVAL_BLOCK)))
        block = np.cumsum(np.concatenate(([last], gaps)))[1:]
        last = float(block[-1])
        yield start, block / rate
        start += _ARRIVAL_BLOCK


def poisson_arrivals(src: RandomSource, count: int) -> np.ndarray:
    """
    The first count arrival times of a rate-1 Poisson process

    Parameters
    ----------
    src: RandomSource
        a single-trial source, gaps are drawn from its stream
    count: int
        number of arrivals

    Returns
    -------
    np.ndarray
        strictly increasing arrival times
    """
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    blocks = []
    for start, block in arrival_blocks(src):
        if start >= count:
            break
        blocks.append(block)
    if not blocks:
        return np.zeros(0)
    return np.concatenate(blocks)[:count]


def poisson_times(
    src: RandomSource, horizon: float, rate: float = 1.0
) -> np.ndarray:
    """
    The arrival times of a Poisson process in (0, horizon]

    Parameters
    ----------
    src: RandomSource
        a single-trial source
    horizon: float
        strictly positive finite time horizon
    rate: float = 1.0
        the process intensity

    Returns
    -------
    np.ndarray
        strictly increasing times; the gaps are iid exponential with the given rate
    """
    if not 0 < horizon < np.inf:
        raise ValueError(f"horizon must be positive and finite, got {horizon}")
    blocks = []
    for _, block in arrival_blocks(src, rate):
        if block[-1] > horizon:
            blocks.append(block[block <= horizon])
            break
        blocks.append(block)
    return np.concatenate(blocks)
