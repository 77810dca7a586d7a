"""
Run manifests and report files
"""

__all__ = [
    "RunManifest",
    "load_json",
    "now",
    "write_json",
    "write_pair_csv",
    "write_sweep_csv",
    "write_trajectory_csv",
]

import csv
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
import json
import numpy as np
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

PathLike = Union[str, Path]

SWEEP_COLUMNS = ("epsilon", "mean", "se", "ci_low", "ci_high", "exact_speed")
TRAJECTORY_COLUMNS = ("trial", "step", "time", "position")
PAIR_COLUMNS = ("pair", "walk", "step", "position")


def now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _plain(value: Any) -> Any:
    """json default: numpy scalars and arrays, enums"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, default=_plain) + "\n")
    return path


def load_json(path: PathLike) -> Dict[str, Any]:
    return json.loads(Path(path).read_text())


@dataclass
class RunManifest:
    """
    Everything needed to reproduce a command's result

    Attributes
    ----------
    command: str
        estimate, sweep or verify
    config: Dict[str, Any]
        the serialized SimConfig (empty for verify)
    seed: int
        64-bit master seed
    code_version: str
        the package version that produced the result
    started: str
    finished: str
        ISO-8601 UTC timestamps
    result: Dict[str, Any]
        the command's report payload
    arguments: Dict[str, Any]
        command arguments that are not part of the config (grid, suite)
    """

    command: str
    config: Dict[str, Any]
    seed: int
    code_version: str
    started: str
    finished: str
    result: Dict[str, Any]
    arguments: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        # through json so numpy values come back as plain python
        return json.loads(json.dumps(asdict(self), default=_plain))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            command=data["command"],
            config=data["config"],
            seed=int(data["seed"]),
            code_version=data["code_version"],
            started=data["started"],
            finished=data["finished"],
            result=data["result"],
            arguments=data.get("arguments", {}),
        )

    def save(self, path: PathLike) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path: PathLike) -> "RunManifest":
        return cls.from_dict(load_json(path))


def _write_rows(
    path: PathLike, columns: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        writer.writerows(rows)
    return path


def write_sweep_csv(path: PathLike, rows: Iterable[Dict[str, Any]]) -> Path:
    """One line per epsilon, exact_speed left blank when there is none"""
    return _write_rows(
        path,
        SWEEP_COLUMNS,
        (
            ["" if row[key] is None else repr(float(row[key])) for key in SWEEP_COLUMNS]
            for row in rows
        ),
    )


def write_trajectory_csv(
    path: PathLike,
    paths: Sequence[np.ndarray],
    times: Optional[Sequence[np.ndarray]] = None,
) -> Path:
    """
    Rows (trial, step, time, position)

    Parameters
    ----------
    paths: Sequence[np.ndarray]
        positions per trial, a (trials, steps+1) array or a list of runs of
        different lengths
    times: Optional[Sequence[np.ndarray]] = None
        per trial, the jump times of a continuous run; the step index is the
        time of a discrete walk
    """
    if isinstance(paths, np.ndarray):
        paths = np.atleast_2d(paths)

    def rows():
        for trial, walk in enumerate(paths):
            for step, position in enumerate(walk):
                if times is None:
                    time = step
                else:
                    time = 0.0 if step == 0 else repr(float(times[trial][step - 1]))
                yield trial, step, time, int(position)

    return _write_rows(path, TRAJECTORY_COLUMNS, rows())


def write_pair_csv(path: PathLike, forward: np.ndarray, backward: np.ndarray) -> Path:
    """Rows (pair, walk, step, position), walk is forward or backward"""
    forward = np.atleast_2d(forward)
    backward = np.atleast_2d(backward)

    def rows():
        for pair in range(forward.shape[0]):
            for walk, positions in (("forward", forward), ("backward", backward)):
                for step, position in enumerate(positions[pair]):
                    yield pair, walk, step, int(position)

    return _write_rows(path, PAIR_COLUMNS, rows())
