"""JSON model files: schema, validation and construction of the symbolic objects."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from . import expr as E
from .contraction import ControlModel
from .eigen import EigenPair
from .expr import DEFAULT_SEED, ZeroTestPolicy
from .field import CExpr, CMatrix, DimensionError
from .lieop import VectorField
from .riccati import GridSpec, RiccatiData, SubspaceBasis

SEED_ENV = "DREKIT_SEED"

_entry = {"oneOf": [{"type": "string"}, {"type": "number"}]}
_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _entry}}
_vector = {"type": "array", "minItems": 1, "items": _entry}

MODEL_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "drekit model",
    "type": "object",
    "required": ["n", "f"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "m": {"type": "integer", "minimum": 1},
        "f": _vector,
        "A": _matrix,
        "R": _matrix,
        "Q": _matrix,
        "B": _matrix,
        "X": _matrix,
        "U": _matrix,
        "V": _matrix,
        "Lambda": _vector,
        "skip_columns": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "eigenpairs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["lambda", "vector"],
                "additionalProperties": False,
                "properties": {
                    "side": {"enum": ["right", "left"]},
                    "lambda": _entry,
                    "vector": _vector,
                    "label": {"type": "string"},
                },
            },
        },
        "witnesses": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                side: {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["lambda", "vector"],
                        "additionalProperties": False,
                        "properties": {"lambda": _entry, "vector": _vector},
                    },
                }
                for side in ("U", "V")
            },
        },
        "controller": _vector,
        "grid": {"type": "string"},
        "x0": {"type": "array", "items": {"type": "number"}},
        "policy": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "samples": {"type": "integer", "minimum": 1},
                "tol_abs": {"type": "number", "minimum": 0},
                "tol_rel": {"type": "number", "minimum": 0},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "notes": {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "string"}}]},
    },
}


class ModelError(ValueError):
    """Model file is unreadable, schema-invalid or dimensionally inconsistent."""


def _text(v) -> str:
    return v if isinstance(v, str) else repr(v)


@dataclass
class Witness:
    vector: CMatrix
    value: CExpr


@dataclass
class Model:
    name: str
    n: int
    f: VectorField
    A: CMatrix
    R: CMatrix
    Q: CMatrix
    B: CMatrix | None = None
    X: CMatrix | None = None
    U: CMatrix | None = None
    V: CMatrix | None = None
    Lambda: list[CExpr] | None = None
    skip_columns: list[int] = field(default_factory=list)
    eigenpairs: list[EigenPair] = field(default_factory=list)
    witnesses_U: list[Witness] = field(default_factory=list)
    witnesses_V: list[Witness] = field(default_factory=list)
    controller: list[E.Expr] | None = None
    grid: GridSpec | None = None
    x0: list[float] | None = None
    policy: dict = field(default_factory=dict)
    defaults: list[str] = field(default_factory=list)
    raw: dict = field(default_factory=dict)

    @property
    def riccati(self) -> RiccatiData:
        return RiccatiData(self.A, self.R, self.Q, self.f)

    def basis(self) -> SubspaceBasis:
        if self.U is None or self.V is None:
            raise ModelError("model has no U, V")
        if self.Lambda is not None:
            return SubspaceBasis.diagonal(self.U, self.V, self.Lambda)
        return SubspaceBasis(self.U, self.V)

    def control(self) -> ControlModel:
        if self.B is None or self.X is None:
            raise ModelError("controller synthesis needs B and X")
        return ControlModel(self.f, self.B, self.X, self.Q)


def _matrix(data, n: int, shape: tuple[int, int], name: str) -> CMatrix:
    rows = [[_text(v) for v in row] for row in data]
    if len(rows) != shape[0] or any(len(r) != shape[1] for r in rows):
        got = (len(rows), len(rows[0]) if rows else 0)
        raise ModelError(f"{name} must be {shape[0]}x{shape[1]}, got {got[0]}x{got[1]}")
    return CMatrix.parse(rows, n)


def _column(data, n: int, length: int, name: str) -> CMatrix:
    if len(data) != length:
        raise ModelError(f"{name} must have {length} entries, got {len(data)}")
    return CMatrix.column([CExpr.parse(_text(v), n) for v in data])


def build_model(data: dict) -> Model:
    try:
        jsonschema.validate(data, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelError(f"schema error at {where}: {exc.message}") from None
    n = data["n"]
    if len(data["f"]) != n:
        raise ModelError(f"f must have n={n} components, got {len(data['f'])}")
    try:
        return _build(data, n)
    except (E.ParseError, DimensionError, ZeroDivisionError) as exc:
        raise ModelError(str(exc)) from None


def _build(data: dict, n: int) -> Model:
    f = VectorField.parse([_text(v) for v in data["f"]])
    defaults = []
    B = None
    if "B" in data:
        m = data.get("m", len(data["B"][0]))
        B = _matrix(data["B"], n, (n, m), "B")
    elif "m" in data:
        raise ModelError("m given without B")
    if "A" in data:
        A = _matrix(data["A"], n, (n, n), "A")
    else:
        A = f.jacobian()
        defaults.append("A defaults to the Jacobian df/dx")
    if "R" in data:
        R = _matrix(data["R"], n, (n, n), "R")
    elif B is not None:
        R = (B @ B.T).simplify()
        defaults.append("R defaults to B B^T")
    else:
        R = CMatrix.zeros(n, n)
        defaults.append("R defaults to 0")
    if "Q" in data:
        Q = _matrix(data["Q"], n, (n, n), "Q")
    else:
        Q = CMatrix.zeros(n, n)
        defaults.append("Q defaults to 0")
    opt = {k: _matrix(data[k], n, (n, n), k) for k in ("X", "U", "V") if k in data}
    if ("U" in opt) != ("V" in opt):
        raise ModelError("U and V must be given together")
    lam = None
    if "Lambda" in data:
        if len(data["Lambda"]) != n:
            raise ModelError(f"Lambda must have {n} diagonal entries")
        lam = [CExpr.parse(_text(v), n) for v in data["Lambda"]]
    skip = sorted(set(data.get("skip_columns", [])))
    if any(c > n for c in skip):
        raise ModelError(f"skip_columns entries must be in 1..{n}")
    pairs = []
    for k, p in enumerate(data.get("eigenpairs", [])):
        side = p.get("side", "right")
        vec = _column(p["vector"], n, 2 * n, f"eigenpairs[{k}].vector")
        pairs.append(EigenPair(side, CExpr.parse(_text(p["lambda"]), n), vec, p.get("label", f"pair{k + 1}")))
    wit = data.get("witnesses", {})
    wU = [Witness(_column(w["vector"], n, n, "witness"), CExpr.parse(_text(w["lambda"]), n)) for w in wit.get("U", [])]
    wV = [Witness(_column(w["vector"], n, n, "witness"), CExpr.parse(_text(w["lambda"]), n)) for w in wit.get("V", [])]
    ctrl = None
    if "controller" in data:
        if B is None:
            raise ModelError("controller given without B")
        if len(data["controller"]) != B.cols:
            raise ModelError(f"controller must have {B.cols} components")
        ctrl = [E.parse(_text(v), n) for v in data["controller"]]
    grid = None
    if "grid" in data:
        grid = parse_grid(data["grid"], n)
    x0 = data.get("x0")
    if x0 is not None and len(x0) != n:
        raise ModelError(f"x0 must have {n} components")
    return Model(
        name=data.get("name", "model"),
        n=n,
        f=f,
        A=A,
        R=R,
        Q=Q,
        B=B,
        X=opt.get("X"),
        U=opt.get("U"),
        V=opt.get("V"),
        Lambda=lam,
        skip_columns=skip,
        eigenpairs=pairs,
        witnesses_U=wU,
        witnesses_V=wV,
        controller=ctrl,
        grid=grid,
        x0=x0,
        policy=dict(data.get("policy", {})),
        defaults=defaults,
        raw=data,
    )


def parse_grid(text: str, n: int) -> GridSpec:
    try:
        g = GridSpec.parse(text)
    except ValueError:
        raise ModelError(f"bad grid spec {text!r}; expected 'lo,hi,steps;...'") from None
    if len(g.axes) == 1 and n > 1:
        g = GridSpec(g.axes * n)
    if len(g.axes) != n:
        raise ModelError(f"grid needs {n} axes, got {len(g.axes)}")
    if any(steps < 1 or not lo <= hi for lo, hi, steps in g.axes):
        raise ModelError(f"bad grid spec {text!r}")
    return g


def load_model(path: str | os.PathLike) -> Model:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ModelError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return build_model(data)


def resolve_policy(model_policy: dict, overrides: dict[str, Any], env=None) -> ZeroTestPolicy:
    """Command line beats model file beats DREKIT_SEED beats the built-in default."""
    env = os.environ if env is None else env
    seed = DEFAULT_SEED
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV], 0)
        except ValueError:
            raise ModelError(f"{SEED_ENV} must be an integer") from None
    kw: dict[str, Any] = {"seed": seed}
    kw.update(model_policy)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ZeroTestPolicy(**kw)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"bad policy: {exc}") from None


def bundled_model_path(name: str = "rl_circuit") -> Path:
    return Path(__file__).parent / "data" / f"{name}.json"
