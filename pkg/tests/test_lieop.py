import numpy as np
import pytest
from hypothesis import given

from drekit import expr as E
from drekit.expr import parse
from drekit.field import CExpr, c_is_zero
from drekit.lieop import VectorField, delta_f, delta_f_matrix
from drekit.sim import integrate

from conftest import mat
from test_expr import rational_exprs

F = VectorField.parse(["x2", "-x1 - x2 + sin(t)"])


def test_constants_are_annihilated():
    assert c_is_zero(delta_f(CExpr.lift(5), F))


def test_coordinate_gives_field_component():
    assert c_is_zero(delta_f(CExpr.parse("x1", 2), F) - CExpr(F[0]))


def test_explicit_time_dependence():
    g = VectorField.zero(1)
    assert c_is_zero(delta_f(CExpr.parse("t^2", 1), g) - CExpr.parse("2*t", 1))


def test_field_rejects_out_of_range_variable():
    with pytest.raises(ValueError):
        VectorField((parse("x2", 2),))


def test_jacobian(rl_field):
    J = rl_field.jacobian()
    assert E.to_string(J[0, 0].re) == "(x1^2 - 2*x1*x2 - 1)/(x1^4 + 2*x1^2 + 1)"
    assert J.to_strings()[1] == ["1", "-1"]


@given(rational_exprs, rational_exprs)
def test_leibniz(a, b):
    a, b = CExpr(a), CExpr(b)
    lhs = delta_f(a * b, F)
    rhs = delta_f(a, F) * b + a * delta_f(b, F)
    assert c_is_zero(lhs - rhs)


@given(rational_exprs)
def test_inverse_rule(a):
    # delta(1/a) = -delta(a)/a^2 wherever a is invertible
    a = CExpr(E.add(E.mul(a, a), E.ONE))
    assert c_is_zero(delta_f(a.reciprocal(), F) + delta_f(a, F) / (a * a))


def test_complex_linearity():
    z = CExpr.parse("x1 @ x2^2", 2)
    d = delta_f(z, F)
    assert c_is_zero(CExpr(d.re) - delta_f(CExpr(z.re), F))
    assert c_is_zero(CExpr(d.im) - delta_f(CExpr(z.im), F))


def test_matrix_entrywise(rl_field):
    m = mat([["x1", 1], [0, "x2"]])
    d = delta_f_matrix(m, rl_field)
    assert c_is_zero(d[0, 0] - CExpr(rl_field[0]))
    assert c_is_zero(d[0, 1])


def test_derivative_along_trajectories():
    # d/dt a(x(t), t) computed by differencing an integrated path
    a = parse("x1^2*x2 + x1*t", 2)
    da = delta_f(CExpr(a), F).re
    tr = integrate(F, [0.4, -0.3], 0.0, 1.0, 1e-3)
    vals = np.array([E.evaluate(a, list(x), t) for t, x in zip(tr.t, tr.x)])
    fd = np.gradient(vals, tr.t)
    ref = np.array([E.evaluate(da, list(x), t) for t, x in zip(tr.t, tr.x)])
    assert np.max(np.abs(fd[2:-2] - ref[2:-2])) < 1e-5
