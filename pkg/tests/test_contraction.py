import numpy as np
import pytest
import sympy as sp

from drekit import expr as E
from drekit.contraction import (
    ControlModel,
    IntegrabilityError,
    QuadratureClosedLoop,
    check_contraction_identity,
    check_controller_gradient,
    check_gradient_fd,
    check_integrability,
    closed_loop_field,
    line_integral,
    quadrature_controller,
    synthesize_controller,
)
from drekit.field import CMatrix
from drekit.lieop import VectorField
from drekit.riccati import GridSpec, check_dre, RiccatiData
from drekit.sim import integrate

from conftest import mat
from oracles import syms, to_sympy

GRID = GridSpec.parse("-2,2,21;-2,2,21").points()


@pytest.fixture(scope="module")
def rl(rl_field, rl_X):
    return ControlModel(rl_field, mat([[0], [1]]), rl_X, mat([["3 + 4*x1^2 + x1^4", 0], [0, 1]]))


def test_integrability(rl):
    assert check_integrability(rl)
    f = VectorField.zero(2)
    assert check_integrability(ControlModel(f, mat([[0], [1]]), CMatrix.identity(2), CMatrix.zeros(2, 2)))
    bad = ControlModel(f, mat([[0], [1]]), mat([["x2", 0], [0, 1]]), CMatrix.zeros(2, 2))
    v = check_integrability(bad)
    assert not v and v.details["entry"]["X_entry"] == [0, 0]


def test_example_controller(rl):
    k = synthesize_controller(rl)
    assert k.to_strings() == ["1/3*x1^3 + x1 + x2"]
    assert check_controller_gradient(k)
    assert check_gradient_fd(k, samples=50)


def test_identity_metric_controller():
    m = ControlModel(VectorField.zero(2), mat([[1], [0]]), CMatrix.identity(2), CMatrix.zeros(2, 2))
    assert synthesize_controller(m).to_strings() == ["x1"]


def test_non_integrable_raises():
    m = ControlModel(VectorField.zero(2), mat([[0], [1]]), mat([["x2", 0], [0, 1]]), CMatrix.zeros(2, 2))
    with pytest.raises(IntegrabilityError):
        synthesize_controller(m)


def test_state_dependent_b_rejected(rl_field, rl_X):
    with pytest.raises(ValueError):
        ControlModel(rl_field, mat([[0], ["x1"]]), rl_X, CMatrix.zeros(2, 2))


def test_closed_loop_matches_hand_algebra(rl):
    F = closed_loop_field(rl, synthesize_controller(rl))
    t, x1, x2 = syms(2)
    assert sp.simplify(to_sympy(F[1], 2) - (-x1**3 / 3 - 2 * x2)) == 0
    assert F[0] == rl.f.simplify()[0]


def test_closed_loop_with_zero_input_matrix(rl_field):
    m = ControlModel(rl_field, mat([[0], [0]]), CMatrix.identity(2), CMatrix.zeros(2, 2))
    F = closed_loop_field(m, synthesize_controller(m))
    assert all(E.is_zero(a - b) for a, b in zip(F, rl_field))


def test_contraction_identity(rl):
    k = synthesize_controller(rl)
    v = check_contraction_identity(rl, k, grid=GRID)
    assert v and v.details["identity"] and v.details["max_eigenvalue"] <= -1e-9


def test_contraction_identity_zero_system():
    m = ControlModel(VectorField.zero(2), mat([[0], [0]]), CMatrix.identity(2), CMatrix.zeros(2, 2))
    assert check_contraction_identity(m, synthesize_controller(m))


def test_perturbed_metric_fails(rl, rl_field):
    k = synthesize_controller(rl)
    X = rl.X + mat([["x1", 0], [0, 0]])
    bad = ControlModel(rl_field, rl.B, X, rl.Q)
    assert not check_contraction_identity(bad, k)


def test_identity_agrees_with_riccati_residual(rl, rl_data):
    # both forms must give the same verdict for the true and a perturbed metric
    k = synthesize_controller(rl)
    for X in (rl.X, rl.X + mat([[1, 0], [0, 0]])):
        m = ControlModel(rl.f, rl.B, X, rl.Q)
        d = RiccatiData(rl_data.A, rl_data.R, rl.Q, rl.f)
        assert bool(check_contraction_identity(m, k)) == bool(check_dre(X, d))


def test_path_independence(rl):
    k = synthesize_controller(rl)
    rng = np.random.default_rng(11)
    for _ in range(10):
        end = rng.uniform(-2, 2, 2)
        path = [np.zeros(2)] + [rng.uniform(-2, 2, 2) for _ in range(3)] + [end]
        ref = k.evaluate(end)
        got = line_integral(k.rows, path)
        assert np.allclose(got, ref, rtol=1e-6, atol=1e-9)


def test_quadrature_fallback():
    # B^T X = [1/(1+x1^2), 1] has the non-polynomial antiderivative atan(x1)
    m = ControlModel(
        VectorField.parse(["x2", "-x1"]), mat([[0], [1]]),
        mat([[2, "1/(1 + x1^2)"], ["1/(1 + x1^2)", 1]]), CMatrix.identity(2),
    )
    k = synthesize_controller(m)
    assert not k.symbolic and k.to_strings() is None
    x = [0.8, -1.1]
    assert k.evaluate(x)[0] == pytest.approx(np.arctan(0.8) - 1.1, abs=1e-12)
    assert quadrature_controller(k.rows, x)[0] == pytest.approx(k.evaluate(x)[0])
    tr = integrate(QuadratureClosedLoop(m, k), [1.0, 0.0], 0.0, 1.0, 0.01)
    assert not tr.truncated
