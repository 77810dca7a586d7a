import csv
import numpy as np
from pathlib import Path
import tempfile
import unittest

from rwdre.environments import EnvironmentKind
from rwdre.manifest import (
    RunManifest,
    load_json,
    write_json,
    write_pair_csv,
    write_sweep_csv,
    write_trajectory_csv,
)


def read_rows(path: Path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestManifest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        manifest = RunManifest(
            command="estimate",
            config={"epsilon": 0.25},
            seed=2**64 - 1,
            code_version="0.1.0",
            started="2024-01-01T00:00:00+00:00",
            finished="2024-01-01T00:00:05+00:00",
            result={"mean": np.float64(0.125), "counts": np.arange(3)},
        )
        path = manifest.save(self.out / "nested" / "manifest.json")
        loaded = RunManifest.load(path)
        assert loaded.seed == 2**64 - 1
        assert loaded.result == {"mean": 0.125, "counts": [0, 1, 2]}
        assert loaded.arguments == {}
        assert loaded.to_dict() == manifest.to_dict()

    def test_json(self):
        data = {"b": EnvironmentKind.IID_REFRESH, "a": 1}
        path = write_json(self.out / "x.json", data)
        assert path.read_text().index('"a"') < path.read_text().index('"b"')
        assert load_json(path) == {"a": 1, "b": "iid-refresh"}
        with self.assertRaises(TypeError):
            write_json(self.out / "y.json", {"a": object()})

    def test_sweep_csv(self):
        row = {"epsilon": 0.1, "mean": 0.05, "se": 0.01, "ci_low": 0.03}
        row.update(ci_high=0.07, exact_speed=None)
        rows = read_rows(write_sweep_csv(self.out / "sweep.csv", [row]))
        assert rows[1] == ["0.1", "0.05", "0.01", "0.03", "0.07", ""]

    def test_trajectories(self):
        positions = np.array([[0, 1, 2], [0, -1, 0]])
        rows = read_rows(write_trajectory_csv(self.out / "d.csv", positions))
        assert len(rows) == 7
        assert rows[6] == ["1", "2", "2", "0"]

        ragged = [np.array([0, 1]), np.array([0, 1, 0])]
        times = [np.array([0.5]), np.array([0.25, 0.75])]
        rows = read_rows(write_trajectory_csv(self.out / "c.csv", ragged, times))
        assert len(rows) == 6
        assert rows[5] == ["1", "2", "0.75", "0"]

    def test_pairs(self):
        forward = np.array([[0, 1, 2]])
        backward = np.array([[2, 3, 2]])
        rows = read_rows(write_pair_csv(self.out / "p.csv", forward, backward))
        assert rows[0] == ["pair", "walk", "step", "position"]
        assert [row[1] for row in rows[1:]] == ["forward"] * 3 + ["backward"] * 3
        assert rows[4] == ["0", "backward", "0", "2"]
