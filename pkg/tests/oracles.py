"""Independent reference computations (sympy and plain numpy)."""

import numpy as np
import sympy as sp

from drekit import expr as E

T_SYM = sp.Symbol("t")


def syms(n):
    return [T_SYM] + list(sp.symbols(f"x1:{n + 1}"))


def to_sympy(e, n):
    """Translate through the printed form, so the oracle never sees our trees."""
    names = {f"x{i}": s for i, s in enumerate(syms(n)[1:], start=1)}
    names["t"] = T_SYM
    text = E.to_string(e).replace("^", "**")
    return sp.sympify(text, locals=names)


def sympy_zero(expr):
    return sp.simplify(expr) == 0


def care_by_eigenvectors(A, R, Q):
    """Stable invariant subspace of the constant Hamiltonian, X = V U^-1."""
    n = A.shape[0]
    H = np.block([[A, -R], [-Q, -A.T]])
    lam, W = np.linalg.eig(H)
    stable = W[:, lam.real < 0]
    assert stable.shape[1] == n
    U, V = stable[:n], stable[n:]
    return np.real_if_close(V @ np.linalg.inv(U), tol=1e6)
