"""drekit command line: verify Riccati solutions, eigenpairs, subspaces and controllers.

Exit codes: 0 every check passed, 1 a check failed, 2 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import expr as E
from .contraction import (
    IntegrabilityError,
    QuadratureClosedLoop,
    check_contraction_identity,
    check_controller_gradient,
    check_gradient_fd,
    check_integrability,
    closed_loop_field,
    synthesize_controller,
)
from .eigen import check_eigenpair, reflect_pair
from .expr import InconclusiveZeroTest, ZeroTestPolicy
from .field import CMatrix, SingularMatrixError, locate, m_inverse, m_rank_numeric, matrix_is_zero
from .lieop import VectorField
from .model import Model, ModelError, load_model, parse_grid, resolve_policy
from .report import Verdict
from .riccati import (
    GridSpec,
    InvarianceError,
    SymmetryError,
    check_closedloop_spectrum,
    check_dre,
    check_gram_symmetry,
    check_invariance,
    check_J_skew,
    check_lyapunov_relation,
    check_no_imaginary_axis,
    check_psd_on_grid,
    check_regularity_witness_U,
    check_regularity_witness_V,
    check_symmetric,
    dre_residual,
    hamiltonian_blocks,
)
from .sim import grid_points, integrate, integrate_variational, phase_portrait, portrait_svg, trajectories_to_csv

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

DEFAULT_GRID = "-2,2,21"
DEFAULT_PORTRAIT_GRID = "-2,2,5"


class InputError(Exception):
    pass


class Report:
    """Accumulates checks, outputs and assumptions into one certificate."""

    def __init__(self, command: str, model: Model, policy: ZeroTestPolicy):
        self.command = command
        self.model = model
        self.policy = policy
        self.checks: list[Verdict] = []
        self.assumptions: list[str] = list(model.defaults)
        self.outputs: dict = {}
        self.errors: list[str] = []

    def add(self, v: Verdict) -> Verdict:
        self.checks.append(v)
        return v

    def fail(self, name: str, message: str) -> None:
        self.checks.append(Verdict(name, False, details={"error": message}))
        self.errors.append(message)

    @property
    def passed(self) -> bool:
        return all(self.checks)

    def to_dict(self) -> dict:
        return {
            "tool": f"drekit {__version__}",
            "command": self.command,
            "model": self.model.name,
            "policy": self.policy.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
            "assumptions": self.assumptions,
            "outputs": self.outputs,
            "passed": self.passed,
        }


def _grid(args, model: Model, fallback: str) -> GridSpec:
    if args.grid:
        return parse_grid(args.grid, model.n)
    if model.grid is not None and fallback == DEFAULT_GRID:
        return model.grid
    return parse_grid(fallback, model.n)


def _cols(text: str | None, model: Model) -> list[int]:
    """1-based column list from the CLI (or the model) to 0-based indices."""
    if text is None:
        return [c - 1 for c in model.skip_columns]
    try:
        cols = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InputError(f"bad --skip-columns {text!r}") from None
    if any(not 1 <= c <= model.n for c in cols):
        raise InputError(f"--skip-columns entries must be in 1..{model.n}")
    return sorted({c - 1 for c in cols})


def _psd(report: Report, X: CMatrix, grid: GridSpec, strict: bool = True) -> None:
    r = check_psd_on_grid(X, grid.points(), report.policy, strict=strict)
    r.verdict.details["grid"] = grid.to_text()
    report.add(r.verdict)


def cmd_verify_dre(args, model: Model, report: Report) -> None:
    if model.X is None:
        raise InputError("verify-dre needs X in the model")
    for name, M in (("R_symmetric", model.R), ("Q_symmetric", model.Q)):
        report.add(check_symmetric(M, report.policy, name))
    sym = report.add(check_symmetric(model.X, report.policy, "X_symmetric"))
    v = report.add(check_dre(model.X, model.riccati, report.policy))
    if not v:
        report.outputs["residual"] = dre_residual(model.X, model.riccati).simplify().to_strings()
    if sym:
        _psd(report, model.X, _grid(args, model, DEFAULT_GRID), strict=False)


def cmd_eig(args, model: Model, report: Report) -> None:
    H = hamiltonian_blocks(model.A, model.R, model.Q)
    report.outputs["hamiltonian"] = H.to_strings()
    pairs = list(enumerate(model.eigenpairs, start=1))
    if args.pair not in (None, "all"):
        try:
            idx = int(args.pair)
        except ValueError:
            raise InputError(f"--pair must be an index or 'all', got {args.pair!r}") from None
        if not 1 <= idx <= len(pairs):
            raise InputError(f"--pair {idx} out of range 1..{len(pairs)}")
        pairs = [pairs[idx - 1]]
    if not pairs:
        report.assumptions.append("no eigenpairs listed; nothing to verify")
        return
    report.add(check_J_skew(H, report.policy))
    for k, p in pairs:
        v = report.add(check_eigenpair(H, p, model.f, report.policy))
        v.details["index"] = k
        r = reflect_pair(p)
        rv = report.add(check_eigenpair(H, r, model.f, report.policy))
        rv.name = "reflected_" + rv.name
        rv.details["index"] = k
        rv.details["reflected"] = r.to_dict()


def cmd_solve(args, model: Model, report: Report) -> None:
    if model.U is None:
        raise InputError("solve needs U and V in the model")
    d = model.riccati
    pol = report.policy
    for name, M in (("R_symmetric", model.R), ("Q_symmetric", model.Q)):
        report.add(check_symmetric(M, pol, name))
    if not report.passed:
        return
    H = hamiltonian_blocks(model.A, model.R, model.Q)
    report.add(check_J_skew(H, pol))
    b = model.basis()
    skip = _cols(args.skip_columns, model)
    if skip:
        report.assumptions.append(
            "invariance not verified symbolically for column(s) " + ",".join(str(c + 1) for c in skip)
        )
    try:
        report.add(check_invariance(b, H, model.f, pol, skip))
    except InvarianceError as exc:
        report.fail("invariance", str(exc))
        return
    ia = report.add(check_no_imaginary_axis(H))
    if ia.details.get("assumed"):
        report.assumptions.append("spectrum of H off the imaginary axis (not checkable for non-constant H)")
    for w in model.witnesses_U:
        report.add(check_regularity_witness_U(w.vector, w.value, d, pol))
    for w in model.witnesses_V:
        report.add(check_regularity_witness_V(w.vector, w.value, d, pol))
    rank = m_rank_numeric(b.U, pol)
    if rank < model.n:
        report.fail(
            "U_regular",
            f"U is singular (generic rank {rank} < {model.n}); supply a U-witness v with "
            "A^T v + delta_f(v) = -lambda v, R v = 0 to certify it",
        )
        return
    report.add(Verdict("U_regular", True, details={"rank": rank}))
    X = (b.V @ m_inverse(b.U, pol)).simplify()
    report.outputs["X"] = X.to_strings()
    report.add(check_dre(X, d, pol))
    gram = check_gram_symmetry(b, pol)
    report.add(gram["hermitian"])
    report.add(gram["symmetric"])
    if b.is_diagonal:
        cols = [j for j in range(model.n) if j not in skip]
        if cols:
            report.add(check_closedloop_spectrum(b, X, d, pol, cols))
        if not skip:
            report.add(check_lyapunov_relation(b, d, pol))
    if model.X is not None:
        diff = X - model.X
        cert = matrix_is_zero(diff, pol)
        report.add(Verdict.from_zero("matches_model_X", cert, entry=locate(diff, cert.witness_index)))
    if check_symmetric(X, pol) and X.is_real():
        _psd(report, X, _grid(args, model, DEFAULT_GRID), strict=False)


def cmd_synthesize(args, model: Model, report: Report) -> None:
    cm = model.control()
    pol = report.policy
    integ = report.add(check_integrability(cm, pol))
    if not integ:
        return
    k = synthesize_controller(cm, pol)
    report.outputs["controller"] = k.to_strings()
    if not k.symbolic:
        report.assumptions.append("antiderivative not polynomial; controller evaluated by 32-node Gauss-Legendre quadrature")
        report.add(Verdict("controller_symbolic", True, details={"quadrature": True}))
        return
    report.add(check_controller_gradient(k, pol))
    report.add(check_gradient_fd(k, seed=pol.seed % 2**32))
    F = closed_loop_field(cm, k)
    report.outputs["closed_loop"] = F.to_strings()
    grid = _grid(args, model, DEFAULT_GRID)
    v = report.add(check_contraction_identity(cm, k, pol, grid.points()))
    v.details["grid"] = grid.to_text()
    if model.controller is not None:
        diff = CMatrix.column(k.components) - CMatrix.column(model.controller)
        report.add(Verdict.from_zero("matches_model_controller", matrix_is_zero(diff, pol)))


def _closed_loop(model: Model, report: Report):
    if model.B is None:
        report.assumptions.append("no B: simulating the open-loop field f")
        return model.f
    cm = model.control() if model.X is not None else None
    if model.controller is not None:
        Bk = model.B @ CMatrix.column(model.controller)
        report.outputs["controller"] = [str(c) for c in model.controller]
        return VectorField(tuple(E.simplify(fi - Bk[i, 0].re) for i, fi in enumerate(model.f)))
    if cm is None:
        raise InputError("closed loop needs a controller or X to synthesize one")
    k = synthesize_controller(cm, report.policy)
    report.outputs["controller"] = k.to_strings()
    if not k.symbolic:
        report.assumptions.append("controller evaluated by quadrature")
        return QuadratureClosedLoop(cm, k)
    return closed_loop_field(cm, k)


def _floats(text: str, n: int, flag: str) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",")]
    except ValueError:
        raise InputError(f"bad {flag} {text!r}") from None
    if len(vals) != n:
        raise InputError(f"{flag} needs {n} comma-separated values")
    return vals


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sim_params(args) -> tuple[float, float]:
    t1 = 10.0 if args.t1 is None else args.t1
    h = 1e-3 if args.h is None else args.h
    if not (h > 0 and t1 > 0):
        raise InputError("--t1 and --h must be positive")
    return t1, h


def cmd_simulate(args, model: Model, report: Report) -> str:
    if args.x0 is not None:
        x0 = _floats(args.x0, model.n, "--x0")
    elif model.x0 is not None:
        x0 = model.x0
    else:
        raise InputError("simulate needs --x0 (or x0 in the model)")
    t1, h = _sim_params(args)
    F = _closed_loop(model, report)
    if args.dx0 is not None:
        if not hasattr(F, "jacobian"):
            raise InputError("--dx0 needs a symbolic closed loop")
        tr = integrate_variational(F, x0, _floats(args.dx0, model.n, "--dx0"), 0.0, t1, h)
    else:
        tr = integrate(F, x0, 0.0, t1, h)
    report.add(Verdict("trajectory_complete", not tr.truncated, details={"status": tr.status, "t_end": float(tr.t[-1])}))
    report.outputs["final_state"] = [float(v) for v in tr.final]
    return trajectories_to_csv([tr], args.stride)


def cmd_portrait(args, model: Model, report: Report) -> str:
    grid = _grid(args, model, DEFAULT_PORTRAIT_GRID)
    t1, h = _sim_params(args)
    F = _closed_loop(model, report)
    trajs = phase_portrait(F, grid_points(grid.axes), t1, h)
    bad = [i for i, tr in enumerate(trajs) if tr.truncated]
    report.add(Verdict("trajectories_complete", not bad, details={"truncated": bad}))
    ends = np.array([np.linalg.norm(tr.final) for tr in trajs])
    report.outputs["max_final_norm"] = float(ends.max())
    report.outputs["grid"] = grid.to_text()
    if args.svg:
        if model.n < 2:
            raise InputError("--svg needs n >= 2")
        Path(args.svg).write_text(portrait_svg(trajs))
    return trajectories_to_csv(trajs, args.stride)


COMMANDS: dict[str, Callable] = {
    "verify-dre": cmd_verify_dre,
    "eig": cmd_eig,
    "solve": cmd_solve,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "portrait": cmd_portrait,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="drekit",
        description="Verify differential Riccati equation solutions and synthesize contraction controllers.",
        epilog=(
            "Certificates (JSON) go to stdout, or to --out for the verification commands. "
            "simulate/portrait write CSV to --out (stdout if absent) and the certificate to --cert. "
            "The portrait SVG fits the view box to all trajectories; starts are marked with dots. "
            "Exit codes: 0 pass, 1 check failure, 2 input error. "
            "DREKIT_SEED sets the sampling seed when neither --seed nor the model gives one."
        ),
    )
    p.add_argument("--version", action="version", version=f"drekit {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("model", help="model JSON file")
    p.add_argument("--seed", type=int, help="zero-test sampling seed (u64)")
    p.add_argument("--samples", type=int, help="zero-test sample count N")
    p.add_argument("--tol-abs", type=float)
    p.add_argument("--tol-rel", type=float)
    p.add_argument("--grid", help='grid "lo,hi,steps;lo,hi,steps" (one axis is broadcast)')
    p.add_argument("--t1", type=float, help="final time (default 10)")
    p.add_argument("--h", type=float, help="RK4 step (default 1e-3)")
    p.add_argument("--x0", help='initial state "v1,v2,..."')
    p.add_argument("--dx0", help="initial variation for simulate (adds dx columns)")
    p.add_argument("--out", help="output path")
    p.add_argument("--cert", help="certificate path for simulate/portrait")
    p.add_argument("--svg", help="portrait SVG path")
    p.add_argument("--stride", type=int, default=1, help="write every k-th CSV row (default 1)")
    p.add_argument("--skip-columns", help="1-based U/V columns excluded from the symbolic invariance check")
    p.add_argument("--pair", help="eigenpair index (1-based) or 'all'")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.stride < 1:
        print("drekit: --stride must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        model = load_model(args.model)
        policy = resolve_policy(
            model.policy, {"seed": args.seed, "samples": args.samples, "tol_abs": args.tol_abs, "tol_rel": args.tol_rel}
        )
    except ModelError as exc:
        print(f"drekit: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = Report(args.command, model, policy)
    data = None
    try:
        data = COMMANDS[args.command](args, model, report)
    except (InputError, ModelError, SymmetryError) as exc:
        print(f"drekit: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (IntegrabilityError, InconclusiveZeroTest, SingularMatrixError) as exc:
        report.fail(type(exc).__name__, str(exc))
    cert = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if data is not None:
        _write(args.out, data)
        if args.cert:
            Path(args.cert).write_text(cert)
        elif args.out not in (None, "-"):
            sys.stdout.write(cert)
    else:
        _write(args.out, cert)
    for msg in report.errors:
        print(f"drekit: {msg}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
