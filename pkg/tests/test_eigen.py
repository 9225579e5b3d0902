import numpy as np
import pytest
from hypothesis import given

from drekit import expr as E
from drekit.eigen import (
    DefectiveMatrixError,
    EigenPair,
    EigenpairError,
    check_eigenpair,
    check_left_eigenpair,
    check_matrix_conjugate,
    check_right_eigenpair,
    check_scalar_conjugate,
    check_simple,
    conjugate_by,
    constant_eigendecomposition,
    eigenvalue_quadruples_present,
    hamiltonian_j,
    hamiltonian_j_inv,
    numeric_value,
    reflect_pair,
    scale_eigenpair,
)
from drekit.field import CExpr, CMatrix, SingularMatrixError, matrix_is_zero
from drekit.lieop import VectorField, delta_f
from drekit.riccati import RiccatiData, build_hamiltonian

from conftest import mat
from test_expr import rational_exprs

BETA1 = "-(2 + x1^2)/(1 + x1^2)"
W1 = ["1/(1 + x1^2)", "-1", "1 + x1^2", "0"]


def pair(value, vector, n=2, side="right"):
    return EigenPair(side, CExpr.parse(value, n), CMatrix.column([CExpr.parse(v, n) for v in vector]))


@pytest.fixture(scope="module")
def H(rl_data):
    return build_hamiltonian(rl_data)


def test_hamiltonian_entries(H):
    assert E.to_string(E.simplify(H[2, 0].re)) == "-x1^4 - 4*x1^2 - 3"
    assert H[1, 3] == CExpr.lift(-1)


def test_example_right_pair(H, rl_field):
    assert check_right_eigenpair(H, pair(BETA1, W1), rl_field)


def test_sign_flipped_pair_fails(H, rl_field):
    bad = pair(BETA1, W1[:2] + ["-(1 + x1^2)", "0"])
    v = check_right_eigenpair(H, bad, rl_field)
    assert not v and v.witness is not None
    assert v.details["entry"]["row"] == 2


def test_reflection_gives_left_pair(H, rl_field):
    left = reflect_pair(pair(BETA1, W1))
    assert left.side == "left"
    assert check_left_eigenpair(H, left, rl_field)
    back = reflect_pair(left)
    assert matrix_is_zero(back.vector - pair(BETA1, W1).vector)


def test_j_matrices_are_inverse():
    assert matrix_is_zero(hamiltonian_j(3) @ hamiltonian_j_inv(3) - CMatrix.identity(6))


def test_zero_vector_is_not_an_eigenvector(H, rl_field):
    v = check_eigenpair(H, pair("1", ["0"] * 4), rl_field)
    assert not v and "zero" in v.details["reason"]


def test_side_mismatch_raises(H, rl_field):
    with pytest.raises(EigenpairError):
        check_left_eigenpair(H, pair(BETA1, W1), rl_field)


@given(rational_exprs)
def test_scaling_closure(a):
    f = VectorField.parse(["(-x1 + x2)/(1 + x1^2)", "x1 - x2"])
    Hm = build_hamiltonian(RiccatiData(f.jacobian(), mat([[0, 0], [0, 1]]), mat([["3 + 4*x1^2 + x1^4", 0], [0, 1]]), f))
    factor = CExpr(E.add(E.mul(a, a), E.ONE))
    scaled = scale_eigenpair(pair(BETA1, W1), factor, f)
    assert check_right_eigenpair(Hm, scaled, f)


def test_scaling_by_zero_rejected(rl_field):
    with pytest.raises(ZeroDivisionError):
        scale_eigenpair(pair(BETA1, W1), CExpr.lift(0), rl_field)


@given(rational_exprs, rational_exprs)
def test_scalar_conjugacy(a, c):
    f = VectorField.parse(["x2", "-x1"])
    c = CExpr(E.add(E.mul(c, c), E.const(2)))
    b = CExpr(a) + delta_f(c, f) / c
    assert check_scalar_conjugate(a, b, c, f)
    assert not check_scalar_conjugate(a, b + CExpr.lift(1), c, f)


def test_matrix_conjugacy_roundtrip(rl_field):
    N = mat([["x1", 1], [0, "x2"]])
    T = mat([[1, "x1"], [0, "1 + x2^2"]])
    M = conjugate_by(N, T, rl_field)
    assert check_matrix_conjugate(M, N, T, rl_field)
    assert not check_matrix_conjugate(N, N, T, rl_field)


def test_conjugacy_needs_regular_witness(rl_field):
    N = mat([[1, 0], [0, 1]])
    with pytest.raises(SingularMatrixError):
        check_matrix_conjugate(N, N, mat([["x1", "x1"], [1, 1]]), rl_field)


def test_conjugacy_moves_eigenpairs(rl_field):
    # T maps right eigenvectors of N to right eigenvectors of M with the same values
    N = mat([[-1, 0], [0, -2]])
    T = mat([[1, "x1"], [0, 1]])
    M = conjugate_by(N, T, rl_field)
    for k, lam in enumerate(["-1", "-2"]):
        e = ["1", "0"] if k == 0 else ["0", "1"]
        w = T @ CMatrix.column([CExpr.parse(s, 2) for s in e])
        assert check_right_eigenpair(M, EigenPair("right", CExpr.parse(lam, 2), w), rl_field)


def test_simple_requires_spanning_vectors():
    f = VectorField.zero(2)
    eye = CMatrix.identity(2)
    assert not check_simple(eye, [pair("1", ["1", "0"]), pair("1", ["2", "0"])], f)
    assert check_simple(eye, [pair("1", ["1", "0"]), pair("1", ["0", "1"])], f)


def test_simple_rejects_failing_pair():
    with pytest.raises(EigenpairError):
        check_simple(CMatrix.identity(2), [pair("2", ["1", "0"]), pair("1", ["0", "1"])], VectorField.zero(2))


def test_defective_matrix_detected():
    with pytest.raises(DefectiveMatrixError):
        constant_eigendecomposition(mat([[0, 1], [0, 0]]))


def test_constant_decomposition_pairs_verify():
    H = mat([[0, 1, 0, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, -1, -1, 0]])
    pairs = constant_eigendecomposition(H)
    f = VectorField.zero(2)
    loose = E.ZeroTestPolicy(tol_abs=1e-9, tol_rel=1e-9)
    for p in pairs:
        assert check_right_eigenpair(H, p, f, loose)
    vals = [numeric_value(p.value) for p in pairs]
    assert eigenvalue_quadruples_present(vals)
    ref = np.linalg.eigvals(H.evaluate([]).real)
    assert all(np.min(np.abs(ref - v)) < 1e-12 for v in vals)


def test_quadruple_detector_negative():
    assert not eigenvalue_quadruples_present([1 + 1j, -1 - 1j])
