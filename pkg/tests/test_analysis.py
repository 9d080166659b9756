import json
import math

import numpy as np
import pytest

from spdelay.analysis import (
    AnalysisError,
    ConvergenceTable,
    MeshChoice,
    compute_cell,
    double_mesh_error,
    format_epsilon,
    order,
    reference_mesh,
    resolve_mesh_choice,
    run_comparison,
    run_sweep,
    worker_count,
)
from spdelay.mesh import bisect, build_shishkin, build_uniform, timegrid_for_steps
from spdelay.problem import ProblemFamily
from spdelay.solver import SolutionField, SolveStats

P1 = ProblemFamily("problem1", 1)


@pytest.mark.parametrize(
    "a, b, q",
    [(4e-3, 1e-3, 2.0), (6.410e-3, 2.262e-3, 1.503), (1.481e-1, 1.390e-1, 0.0913), (1.0, 2.0, -1.0)],
)
def test_order_examples(a, b, q):
    assert order(a, b) == pytest.approx(q, abs=5e-4)


def test_order_rejects_nonpositive():
    with pytest.raises(AnalysisError):
        order(0.0, 1.0)


def _field(mesh, M, fn):
    g = timegrid_for_steps(1.0, 2.0, M)
    vals = np.array([fn(mesh.nodes, t) for t in g.levels])
    return SolutionField(mesh, g, vals, "hybrid", SolveStats())


def test_double_mesh_error_examples():
    coarse_mesh = build_uniform(4)
    fine_mesh = build_uniform(8)
    zero = _field(coarse_mesh, 4, lambda x, t: 0 * x)
    # identical functions sampled on nested grids give zero error
    assert double_mesh_error(_field(coarse_mesh, 4, lambda x, t: x + t), _field(fine_mesh, 8, lambda x, t: x + t)) == 0.0
    # a spike at a shared point is seen, a spike at a fine-only point is not
    spike = _field(fine_mesh, 8, lambda x, t: np.where(np.isclose(x, 0.5) & (t == 2.0), 3.0, 0.0))
    assert double_mesh_error(zero, spike) == 3.0
    hidden = _field(fine_mesh, 8, lambda x, t: np.where(np.isclose(x, 0.125), 3.0, 0.0))
    assert double_mesh_error(zero, hidden) == 0.0
    # history levels (t < 0) are excluded
    past = _field(fine_mesh, 8, lambda x, t: np.where(t < 0, 5.0, 0.0) + 0 * x)
    assert double_mesh_error(zero, past) == 0.0


def test_double_mesh_error_checks_nesting():
    coarse = build_shishkin(8, 1e-3, 2.0)
    c = _field(coarse, 4, lambda x, t: 0 * x)
    with pytest.raises(AnalysisError, match="bisection"):
        double_mesh_error(c, _field(build_shishkin(16, 1e-3, 2.0), 8, lambda x, t: 0 * x))
    with pytest.raises(AnalysisError, match="time"):
        double_mesh_error(c, _field(bisect(coarse), 4, lambda x, t: 0 * x))
    assert double_mesh_error(c, _field(bisect(coarse), 8, lambda x, t: 0 * x)) == 0.0


def test_reference_mesh_presets():
    assert reference_mesh("problem1", 1, "upwind_uniform").sigma0 is None
    assert reference_mesh("problem1", 1, "hybrid") == MeshChoice(2.0, "minimal")
    assert reference_mesh("problem2", 1, "hybrid") == MeshChoice(4.2, "minimal")
    assert reference_mesh("problem2", 3, "upwind_shishkin") == MeshChoice(2.0, "lnN")


def test_resolve_mesh_choice():
    assert resolve_mesh_choice(P1, "hybrid") == MeshChoice(2.0, "minimal")
    assert resolve_mesh_choice(P1, "hybrid", None, "lnN") == MeshChoice(2.0, "lnN")
    assert resolve_mesh_choice(P1, "hybrid", 3.5, 2.0) == MeshChoice(3.5, 2.0)
    assert resolve_mesh_choice(P1, "hybrid", "theory").sigma0 == pytest.approx(8.0)
    assert resolve_mesh_choice(P1, "upwind_uniform", 3.0).sigma0 is None


def test_format_epsilon():
    assert format_epsilon(2.0**-12) == "2^-12"
    assert format_epsilon(0.3) == "3.000e-01"


def test_compute_cell_records_diagnostics():
    cell = compute_cell(P1, "hybrid", True, 2.0**-8, 32, 32, MeshChoice(2.0, "minimal"))
    assert cell.E > 0 and math.isfinite(cell.E)
    d = cell.diagnostics
    assert d.solves == 4  # coarse and fine, each at M and 2M
    assert d.diagonally_dominant and d.stability_max <= 0


def test_single_cell_sweep_has_no_orders():
    tb = run_sweep(P1, "hybrid", False, [32], [2.0**-8])
    assert tb.E.shape == (1, 1)
    assert tb.q.shape == (1, 0) and tb.uniform_q.size == 0
    rows = list(tb.rows())
    assert rows[0][4] is None and rows[-1][0] == "uniform"


def test_sweep_input_checks():
    with pytest.raises(AnalysisError):
        run_sweep(P1, "hybrid", False, [32, 48], [0.1])
    with pytest.raises(AnalysisError):
        run_sweep(P1, "central", False, [32], [0.1])
    with pytest.raises(AnalysisError):
        run_sweep(P1, "hybrid", False, [], [0.1])


@pytest.fixture(scope="module")
def small_table():
    return run_sweep(P1, "hybrid", True, [16, 32, 64], [2.0**-4, 2.0**-12], label="demo")


def test_table_shapes_and_uniform_row(small_table):
    tb = small_table
    assert tb.E.shape == (2, 3) and tb.q.shape == (2, 2)
    assert np.array_equal(tb.uniform_E, tb.E.max(axis=0))
    assert tb.uniform_q[0] == pytest.approx(order(tb.uniform_E[0], tb.uniform_E[1]))
    assert tb.M_list == [16, 32, 64]
    assert len(tb.cells) == 6


def test_csv_format(small_table):
    lines = small_table.to_csv().splitlines()
    assert lines[0] == "epsilon,N,M,E,q"
    assert len(lines) == 1 + 2 * 3 + 3
    eps, N, M, E, q = lines[1].split(",")
    assert eps == "6.250e-02" and N == "16" and M == "16"
    assert E == f"{small_table.E[0, 0]:.3e}" and q == f"{small_table.q[0, 0]:.3e}"
    assert lines[3].endswith(",")  # last column has no order
    assert lines[-1].startswith("uniform,64,64,")
    assert small_table.to_csv(scheme_column=True).splitlines()[1].startswith("demo: hybrid + extrapolation,")


def test_markdown_format(small_table):
    md = small_table.to_markdown()
    assert md.startswith("**demo: hybrid + extrapolation**")
    assert "| 2^-12 |" in md and "| **E^N,M** |" in md and "| **q^N,M** |" in md
    assert f"{small_table.E[1, 2]:.3e}" in md


def test_json_round_trip(small_table):
    d = json.loads(small_table.to_json())
    assert d["N"] == [16, 32, 64] and len(d["diagnostics"]) == 6
    back = ConvergenceTable.from_dict(d)
    assert np.array_equal(back.E, small_table.E)
    assert back.mesh_choice == small_table.mesh_choice
    assert back.to_csv() == small_table.to_csv()


def test_threads_do_not_change_results(small_table):
    par = run_sweep(P1, "hybrid", True, [16, 32, 64], [2.0**-4, 2.0**-12], threads=2, label="demo")
    assert np.array_equal(par.E, small_table.E)
    assert worker_count(0) >= 1 and worker_count(3) == 3 and worker_count(-2) == 1


def test_comparison_has_three_schemes():
    tables = run_comparison(P1, [16, 32], [2.0**-8], stability=False)
    assert [t.scheme_kind for t in tables] == ["hybrid", "upwind_uniform", "upwind_shishkin"]
    assert not any(t.extrapolate for t in tables)


# ---- time-only refinement --------------------------------------------------

from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

from spdelay.problem import builtin_problem  # noqa: E402
from spdelay.solver import solve  # noqa: E402
from spdelay.verify import SPACE_FACTORS, TIME_FACTORS, manufactured_smooth  # noqa: E402
from spdelay.analysis import temporal_study  # noqa: E402


def test_manufactured_solution_is_exact_up_to_discretisation():
    spec = manufactured_smooth(2.0**-4, "exp", "sin")
    mesh = build_shishkin(256, spec.epsilon, 2.0, "minimal")
    errs = []
    for M in (64, 128):
        g = timegrid_for_steps(1.0, 2.0, M)
        f = solve(spec, mesh, g)
        exact = np.array([spec.exact(mesh.nodes, t) for t in g.levels])
        assert np.array_equal(f.values[: g.m_tau + 1], exact[: g.m_tau + 1])
        errs.append(np.max(np.abs(f.values - exact)))
    assert 1.8 < errs[0] / errs[1] < 2.2


def test_temporal_study_shapes():
    spec = builtin_problem("problem1", 1, 2.0**-4)
    r = temporal_study(spec, build_shishkin(32, spec.epsilon, 2.0), [4, 8, 16])
    assert r.E.shape == r.E_ext.shape == (3,)
    assert r.q.shape == r.q_ext.shape == (2,)
    with pytest.raises(AnalysisError):
        temporal_study(spec, build_shishkin(32, spec.epsilon, 2.0), [4, 12])


@settings(max_examples=12, deadline=None)
@given(
    space=st.sampled_from(sorted(SPACE_FACTORS)),
    time=st.sampled_from(sorted(TIME_FACTORS)),
    p=st.integers(1, 4),
    k=st.integers(2, 6),
)
def test_extrapolation_raises_temporal_order_to_two(space, time, p, k):
    """Smooth compatible data; moderate epsilon keeps the coarse mesh out of the stiff regime."""
    spec = manufactured_smooth(2.0**-k, space, time, p)
    r = temporal_study(spec, build_shishkin(32, spec.epsilon, 2.0, "minimal"), [128, 256, 512])
    assert np.all(np.abs(r.q - 1.0) < 0.1), r.q
    assert np.all(np.abs(r.q_ext - 2.0) < 0.2), r.q_ext
