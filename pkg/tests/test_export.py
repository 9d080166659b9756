import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdelay.export import FormatError, read_solution_binary, write_solution_binary, write_solution_csv
from spdelay.mesh import build_shishkin, timegrid_for_steps
from spdelay.problem import builtin_problem
from spdelay.solver import solve


@pytest.fixture(scope="module")
def field():
    spec = builtin_problem("problem2", 2, 2.0**-10)
    mesh = build_shishkin(16, spec.epsilon, 2.0, "minimal")
    return solve(spec, mesh, timegrid_for_steps(1.0, 2.0, 8))


def test_csv_layout_and_exact_values(field, tmp_path):
    path = tmp_path / "u.csv"
    write_solution_csv(field, path)
    lines = path.read_text().splitlines()
    head = lines[0].split(",")
    assert head[0] == "t"
    assert np.array_equal([float(v) for v in head[1:]], field.mesh.nodes)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (field.timegrid.n_levels, field.mesh.N + 2)
    assert np.array_equal(data[:, 0], field.times)
    assert np.array_equal(data[:, 1:], field.values)


def test_binary_round_trip(field, tmp_path):
    path = tmp_path / "u.spdd"
    write_solution_binary(field, path)
    dump = read_solution_binary(path)
    assert np.array_equal(dump.times, field.times)
    assert np.array_equal(dump.nodes, field.mesh.nodes)
    assert np.array_equal(dump.values, field.values)
    blob = path.read_bytes()
    assert blob[:4] == b"SPDD" and blob[4] == 1
    rows, cols = struct.unpack_from("<II", blob, 5)
    assert (rows, cols) == field.values.shape
    assert len(blob) == 13 + 8 * (rows + cols + rows * cols)


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda b: b"XXXX" + b[4:], "magic"),
        (lambda b: b[:4] + b"\x02" + b[5:], "version"),
        (lambda b: b[:-8], "size"),
        (lambda b: b[:10], "short"),
    ],
)
def test_binary_rejects_corruption(field, tmp_path, mutate, message):
    path = tmp_path / "u.spdd"
    write_solution_binary(field, path)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(FormatError, match=message):
        read_solution_binary(path)


class _Fake:
    def __init__(self, values, times, nodes):
        self.values, self.times = values, times
        self.mesh = type("M", (), {"nodes": nodes})()


@settings(max_examples=50, deadline=None)
@given(rows=st.integers(1, 6), cols=st.integers(2, 9), seed=st.integers(0, 2**32 - 1))
def test_binary_round_trip_property(rows, cols, seed, tmp_path_factory):
    rng = np.random.default_rng(seed)
    fake = _Fake(rng.normal(size=(rows, cols)) * 1e300 ** rng.uniform(-1, 1), rng.normal(size=rows), np.sort(rng.uniform(size=cols)))
    path = tmp_path_factory.mktemp("bin") / "r.spdd"
    write_solution_binary(fake, path)
    dump = read_solution_binary(path)
    assert np.array_equal(dump.values, fake.values) and np.array_equal(dump.times, fake.times)
