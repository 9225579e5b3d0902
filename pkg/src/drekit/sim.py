"""Fixed-step RK4 trajectories, variational propagation, portraits and CSV/SVG output."""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import expr as E
from .lieop import VectorField

DIVERGENCE_BOUND = 1e6

STATUS_OK = "ok"
STATUS_DIVERGED = "diverged"
STATUS_NONFINITE = "nonfinite"


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    dx: np.ndarray | None = None
    status: str = STATUS_OK

    @property
    def truncated(self) -> bool:
        return self.status != STATUS_OK

    @property
    def final(self) -> np.ndarray:
        return self.x[-1]

    def __len__(self) -> int:
        return len(self.t)


Rhs = Callable[[float, np.ndarray], np.ndarray]


def _check_span(t0: float, t1: float, h: float) -> int:
    if not h > 0:
        raise ValueError("step h must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    return int(round((t1 - t0) / h))


def rk4_batch(rhs: Rhs, y0: np.ndarray, t0: float, t1: float, h: float, guard: Callable[[np.ndarray], np.ndarray]):
    """Integrate a batch of states (rows of y0) in lockstep.

    Returns (times, states[steps+1, batch, dim], last_valid_index[batch], status[batch]).
    A row that trips the guard is frozen at its last good state.
    """
    steps = _check_span(t0, t1, h)
    y = np.array(y0, dtype=float, ndmin=2)
    out = np.empty((steps + 1,) + y.shape)
    out[0] = y
    alive = np.ones(len(y), dtype=bool)
    last = np.full(len(y), steps)
    status = np.array([STATUS_OK] * len(y), dtype=object)
    bad0 = ~np.all(np.isfinite(y), axis=1)
    if bad0.any():
        alive[bad0] = False
        last[bad0] = 0
        status[bad0] = STATUS_NONFINITE
    times = t0 + h * np.arange(steps + 1)
    for i in range(steps):
        t = times[i]
        if alive.any():
            ya = y[alive]
            k1 = rhs(t, ya)
            k2 = rhs(t + h / 2, ya + h / 2 * k1)
            k3 = rhs(t + h / 2, ya + h / 2 * k2)
            k4 = rhs(t + h, ya + h * k3)
            nxt = ya + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            finite = np.all(np.isfinite(nxt), axis=1)
            bounded = guard(nxt)
            idx = np.flatnonzero(alive)
            ok = finite & bounded
            for j in idx[~finite]:
                status[j] = STATUS_NONFINITE
            for j in idx[finite & ~bounded]:
                status[j] = STATUS_DIVERGED
            last[idx[~ok]] = i
            alive[idx[~ok]] = False
            y[idx[ok]] = nxt[ok]
        out[i + 1] = y
    return times, out, last, status


def _state_guard(n: int) -> Callable[[np.ndarray], np.ndarray]:
    return lambda y: np.linalg.norm(y[:, :n], axis=1) <= DIVERGENCE_BOUND


def _field_rhs(field: VectorField) -> Rhs:
    F = field.compiled()
    return lambda t, y: F(t, y)


def integrate_many(field: VectorField, x0s, t0: float, t1: float, h: float) -> list[Trajectory]:
    x0s = np.array(x0s, dtype=float, ndmin=2)
    if x0s.shape[1] != field.n:
        raise ValueError(f"initial states must have {field.n} components")
    times, out, last, status = rk4_batch(_field_rhs(field), x0s, t0, t1, h, _state_guard(field.n))
    return [
        Trajectory(times[: last[b] + 1].copy(), out[: last[b] + 1, b].copy(), None, status[b])
        for b in range(len(x0s))
    ]


def integrate(field: VectorField, x0: Sequence[float], t0: float, t1: float, h: float) -> Trajectory:
    """Classical RK4 with fixed step; truncated with a status flag on blow-up."""
    return integrate_many(field, [x0], t0, t1, h)[0]


def integrate_variational(
    field: VectorField, x0: Sequence[float], dx0: Sequence[float], t0: float, t1: float, h: float
) -> Trajectory:
    """Joint RK4 on x' = f(x, t), dx' = (df/dx) dx."""
    n = field.n
    F = field.compiled()
    jac = field.jacobian()
    Jc = E.compile_vector([jac[i, j].re for i in range(n) for j in range(n)], n)

    def rhs(t, y):
        xs, ds = y[:, :n], y[:, n:]
        Jv = Jc(t, xs).reshape(len(y), n, n)
        return np.hstack([F(t, xs), np.einsum("bij,bj->bi", Jv, ds)])

    y0 = np.concatenate([np.asarray(x0, float), np.asarray(dx0, float)])
    if y0.shape != (2 * n,):
        raise ValueError(f"x0 and dx0 must each have {n} components")
    times, out, last, status = rk4_batch(rhs, y0[None, :], t0, t1, h, _state_guard(n))
    k = last[0] + 1
    return Trajectory(times[:k].copy(), out[:k, 0, :n].copy(), out[:k, 0, n:].copy(), status[0])


def grid_points(axes: Sequence[tuple[float, float, int]]) -> np.ndarray:
    ranges = [np.linspace(lo, hi, steps) for lo, hi, steps in axes]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def phase_portrait(field: VectorField, x0_grid, t1: float, h: float, t0: float = 0.0) -> list[Trajectory]:
    """One trajectory per initial point, ordered as given."""
    return integrate_many(field, x0_grid, t0, t1, h)


def trajectories_to_csv(trajs: Sequence[Trajectory], stride: int = 1) -> str:
    """CSV with header traj_id,t,x1..xn[,dx1..dxn]; floats with 17 significant digits."""
    if not trajs:
        return ""
    n = trajs[0].x.shape[1]
    has_dx = all(tr.dx is not None for tr in trajs)
    cols = ["traj_id", "t"] + [f"x{i}" for i in range(1, n + 1)]
    if has_dx:
        cols += [f"dx{i}" for i in range(1, n + 1)]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for tid, tr in enumerate(trajs):
        idx = list(range(0, len(tr), stride))
        if idx[-1] != len(tr) - 1:
            idx.append(len(tr) - 1)
        for i in idx:
            vals = [tr.t[i], *tr.x[i]]
            if has_dx:
                vals += list(tr.dx[i])
            buf.write(str(tid) + "," + ",".join("%.17g" % v for v in vals) + "\n")
    return buf.getvalue()


@dataclass
class ConvergenceReport:
    final_separation: list[float]
    decrease_fraction: list[float]
    status: list[str]

    def to_dict(self) -> dict:
        return {
            "final_separation": self.final_separation,
            "decrease_fraction": self.decrease_fraction,
            "status": self.status,
        }


def incremental_convergence(field: VectorField, pairs, t1: float, h: float, t0: float = 0.0) -> ConvergenceReport:
    """Separation of trajectory pairs: value at t1 and fraction of decreasing steps."""
    pairs = [(np.asarray(a, float), np.asarray(b, float)) for a, b in pairs]
    if not pairs:
        return ConvergenceReport([], [], [])
    starts = [p for ab in pairs for p in ab]
    trajs = integrate_many(field, starts, t0, t1, h)
    seps, fracs, stats = [], [], []
    for i in range(len(pairs)):
        ta, tb = trajs[2 * i], trajs[2 * i + 1]
        k = min(len(ta), len(tb))
        d = np.linalg.norm(ta.x[:k] - tb.x[:k], axis=1)
        steps = np.diff(d)
        seps.append(float(d[-1]))
        # identical points never separate; count non-increasing steps as decreasing
        fracs.append(float(np.mean(steps <= 0)) if len(steps) else 1.0)
        stats.append(ta.status if ta.truncated else tb.status)
    return ConvergenceReport(seps, fracs, stats)


def convergence_order(field: VectorField, x0, t1: float, h: float, exact: Callable[[float], np.ndarray]) -> list[float]:
    """Observed orders log2(e(h)/e(h/2)) under two halvings."""
    errs = []
    for k in range(3):
        tr = integrate(field, x0, 0.0, t1, h / 2**k)
        errs.append(float(np.max(np.abs(tr.final - exact(t1)))))
    return [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]


def portrait_svg(trajs: Sequence[Trajectory], size: int = 480, margin: int = 20, bounds=None) -> str:
    """Polylines of the first two coordinates; the view box fits all points unless bounds given."""
    pts = np.vstack([tr.x[:, :2] for tr in trajs])
    if bounds is None:
        lo, hi = pts.min(axis=0), pts.max(axis=0)
    else:
        lo, hi = np.array(bounds[0], float), np.array(bounds[1], float)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    scale = (size - 2 * margin) / span

    def proj(p):
        return margin + (p[0] - lo[0]) * scale[0], size - margin - (p[1] - lo[1]) * scale[1]

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    for tr in trajs:
        coords = " ".join("%.2f,%.2f" % proj(p) for p in tr.x[:: max(1, len(tr) // 400), :2])
        lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="1" points="{coords}"/>')
        sx, sy = proj(tr.x[0])
        lines.append(f'<circle cx="{sx:.2f}" cy="{sy:.2f}" r="2" fill="firebrick"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
