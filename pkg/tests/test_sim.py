import numpy as np
import pytest
from hypothesis import given, strategies as st

from drekit.field import CMatrix
from drekit.lieop import VectorField
from drekit.sim import (
    STATUS_DIVERGED,
    convergence_order,
    grid_points,
    incremental_convergence,
    integrate,
    integrate_variational,
    phase_portrait,
    portrait_svg,
    trajectories_to_csv,
)

CLOSED = VectorField.parse(["(-x1 + x2)/(1 + x1^2)", "-x1^3/3 - 2*x2"])
METRIC = CMatrix.parse([["2*(1 + x1^2)^2", "1 + x1^2"], ["1 + x1^2", "1"]], 2)


def test_zero_field_is_stationary():
    tr = integrate(VectorField.zero(2), [1.0, 1.0], 0.0, 1.0, 0.1)
    assert np.all(tr.x == 1.0) and len(tr) == 11


def test_bad_step_rejected():
    with pytest.raises(ValueError):
        integrate(VectorField.zero(1), [0.0], 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(VectorField.zero(1), [0.0], 1.0, 1.0, 0.1)


def test_rk4_order():
    orders = convergence_order(VectorField.parse(["-x1"]), [1.0], 1.0, 0.1, lambda t: np.exp(-t))
    assert all(3.5 <= p <= 4.5 for p in orders)


def test_time_dependent_field():
    tr = integrate(VectorField.parse(["cos(t)"]), [0.0], 0.0, 2.0, 0.01)
    assert tr.final[0] == pytest.approx(np.sin(2.0), abs=1e-9)


def test_divergence_guard():
    tr = integrate(VectorField.parse(["x1"]), [1.0], 0.0, 30.0, 0.01)
    assert tr.status == STATUS_DIVERGED and tr.truncated
    assert np.all(np.isfinite(tr.x)) and tr.t[-1] < 30.0


def test_blow_up_in_finite_time_truncates():
    tr = integrate(VectorField.parse(["x1^2"]), [1.0], 0.0, 2.0, 1e-3)
    assert tr.truncated and tr.t[-1] < 1.01


def test_example_closed_loop_converges():
    assert np.linalg.norm(integrate(CLOSED, [2.0, 2.0], 0.0, 10.0, 1e-3).final) <= 1e-2


def test_variational_matches_matrix_exponential():
    A = np.array([[0.0, 1.0], [-2.0, -0.5]])
    lin = VectorField.parse(["x2", "-2*x1 - 0.5*x2"])
    tr = integrate_variational(lin, [0.3, 0.1], [1.0, -1.0], 0.0, 2.0, 1e-3)
    lam, W = np.linalg.eig(A)
    expm = (W @ np.diag(np.exp(2.0 * lam)) @ np.linalg.inv(W)).real
    assert np.allclose(tr.dx[-1], expm @ [1.0, -1.0], atol=1e-6)


def test_zero_variation_stays_zero():
    tr = integrate_variational(CLOSED, [1.0, -1.0], [0.0, 0.0], 0.0, 1.0, 0.01)
    assert np.all(tr.dx == 0.0)


def test_metric_non_increasing_along_variations():
    tr = integrate_variational(CLOSED, [2.0, 2.0], [1.0, -0.5], 0.0, 5.0, 1e-3)
    Xs = [METRIC.evaluate(list(x)).real for x in tr.x]
    v = np.array([d @ X @ d for d, X in zip(tr.dx, Xs)])
    assert np.all(np.diff(v) <= 1e-8)


def test_portrait_zero_field():
    trs = phase_portrait(VectorField.zero(2), grid_points([(-1, 1, 3), (-1, 1, 3)]), 1.0, 0.5)
    assert all(np.all(t.x == t.x[0]) for t in trs)


def test_stable_focus_spirals_in():
    focus = VectorField.parse(["-0.2*x1 - x2", "x1 - 0.2*x2"])
    tr = integrate(focus, [1.0, 0.0], 0.0, 10.0, 0.01)
    r = np.linalg.norm(tr.x, axis=1)
    assert np.all(np.diff(r) < 0)
    angle = np.unwrap(np.arctan2(tr.x[:, 1], tr.x[:, 0]))
    assert angle[-1] > 2 * np.pi


def test_identical_pairs_never_separate():
    rep = incremental_convergence(CLOSED, [([1.0, 1.0], [1.0, 1.0])], 1.0, 0.01)
    assert rep.final_separation == [0.0] and rep.decrease_fraction == [1.0]


def test_unstable_field_separates():
    rep = incremental_convergence(VectorField.parse(["x1", "x2"]), [([0.1, 0.0], [0.0, 0.1])], 2.0, 0.01)
    assert rep.final_separation[0] > 0.1 * np.sqrt(2) * np.exp(1.9)


def test_csv_format():
    csv = trajectories_to_csv([integrate(VectorField.parse(["-x1", "0"]), [1.0, 2.0], 0.0, 0.1, 0.1)])
    lines = csv.splitlines()
    assert lines[0] == "traj_id,t,x1,x2"
    assert lines[1] == "0,0,1,2"
    assert lines[2].split(",")[2] == "%.17g" % integrate(VectorField.parse(["-x1"]), [1.0], 0.0, 0.1, 0.1).final[0]


def test_csv_variational_header():
    tr = integrate_variational(CLOSED, [1.0, 1.0], [1.0, 0.0], 0.0, 0.01, 0.01)
    assert trajectories_to_csv([tr]).splitlines()[0] == "traj_id,t,x1,x2,dx1,dx2"


def test_csv_deterministic():
    pts = grid_points([(-1, 1, 2), (-1, 1, 2)])
    a = trajectories_to_csv(phase_portrait(CLOSED, pts, 1.0, 0.01))
    b = trajectories_to_csv(phase_portrait(CLOSED, pts, 1.0, 0.01))
    assert a == b


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_batch_equals_single(a, b):
    single = integrate(CLOSED, [a, b], 0.0, 0.5, 0.01)
    batch = phase_portrait(CLOSED, [[0.5, 0.5], [a, b]], 0.5, 0.01)[1]
    assert np.array_equal(single.x, batch.x)


def test_svg_has_one_polyline_per_trajectory():
    trs = phase_portrait(CLOSED, grid_points([(-1, 1, 2), (-1, 1, 2)]), 1.0, 0.1)
    svg = portrait_svg(trs)
    assert svg.startswith("<svg") and svg.count("<polyline") == 4
