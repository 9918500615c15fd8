"""MIQP problem data: min x'Cx + h'y  s.t.  Ax + Gy (>= or <=) b,  x binary, y >= 0."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional

import numpy as np

SYMMETRY_TOL = 1e-12
FEASIBILITY_TOL = 1e-7


class Sense(str, Enum):
    GE = "GE"
    LE = "LE"


class InstanceError(Exception):
    """Base class for instance I/O failures."""


class InstanceParseError(InstanceError):
    pass


class InstanceSchemaError(InstanceError):
    pass


class InstanceValidationError(InstanceError):
    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True, eq=False)
class MiqpInstance:
    n: int
    p: int
    m: int
    C: np.ndarray
    h: np.ndarray
    A: np.ndarray
    G: np.ndarray
    b: np.ndarray
    sense: Sense = Sense.GE

    def __post_init__(self):
        for name in ("C", "h", "A", "G", "b"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "sense", Sense(self.sense))

    def __eq__(self, other):
        if not isinstance(other, MiqpInstance):
            return NotImplemented
        return (
            (self.n, self.p, self.m, self.sense) == (other.n, other.p, other.m, other.sense)
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("C", "h", "A", "G", "b")
            )
        )

    def symmetrized(self) -> "MiqpInstance":
        C = (self.C + self.C.T) / 2.0
        return MiqpInstance(self.n, self.p, self.m, C, self.h, self.A, self.G, self.b, self.sense)

    def normalized(self) -> "MiqpInstance":
        """Equivalent instance with sense GE (LE rows are negated)."""
        if self.sense is Sense.GE:
            return self
        return MiqpInstance(
            self.n, self.p, self.m, self.C, self.h, -self.A, -self.G, -self.b, Sense.GE
        )

    def quad(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.C @ x)

    def objective(self, x, y) -> float:
        return self.quad(x) + float(self.h @ np.asarray(y, dtype=float))

    def residuals(self, x, y) -> np.ndarray:
        """Per-row slack of the constraints; negative entries are violations."""
        lhs = self.A @ np.asarray(x, dtype=float) + self.G @ np.asarray(y, dtype=float)
        if self.sense is Sense.GE:
            return lhs - self.b
        return self.b - lhs

    def is_feasible(self, x, y, tol: float = FEASIBILITY_TOL) -> bool:
        y = np.asarray(y, dtype=float)
        return bool(np.all(y >= -tol) and np.all(self.residuals(x, y) >= -tol))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "m": self.m,
            "sense": self.sense.value,
            "C": self.C.tolist(),
            "h": self.h.tolist(),
            "A": self.A.tolist(),
            "G": self.G.tolist(),
            "b": self.b.tolist(),
        }


@dataclass(frozen=True)
class MixedSolution:
    x: np.ndarray
    y: np.ndarray
    objective: float
    feasible: bool

    @classmethod
    def build(cls, inst: MiqpInstance, x, y) -> "MixedSolution":
        x = np.asarray(x, dtype=np.int8)
        y = np.asarray(y, dtype=float)
        return cls(x, y, inst.objective(x, y), inst.is_feasible(x, y))


def validate(inst: MiqpInstance) -> List[str]:
    """Return a list of human-readable violations; empty means valid."""
    out = []
    shapes = {
        "C": (inst.n, inst.n),
        "h": (inst.p,),
        "A": (inst.m, inst.n),
        "G": (inst.m, inst.p),
        "b": (inst.m,),
    }
    bad = [k for k, shp in shapes.items() if getattr(inst, k).shape != shp]
    if bad:
        out.append("dimension mismatch: " + ", ".join(bad))
    if any(not np.all(np.isfinite(getattr(inst, k))) for k in shapes):
        out.append("non-finite entry")
    if "C" not in bad and np.all(np.isfinite(inst.C)):
        if np.max(np.abs(inst.C - inst.C.T), initial=0.0) > SYMMETRY_TOL:
            out.append("C not symmetric")
    if "h" not in bad and np.any(inst.h < 0):
        out.append("h not nonnegative")
    return out


@dataclass(frozen=True)
class GeneratorParams:
    c_scale: float = 1.0
    jitter: float = 0.1
    h_max: float = 1.0
    y_max: float = 2.0
    slack_max: float = 0.5


def generate(n: int, p: int, m: int, seed: int,
             params: Optional[GeneratorParams] = None) -> MiqpInstance:
    """Random feasible instance with PSD C, built around a hidden feasible point."""
    if min(n, p, m) < 1:
        raise ValueError("n, p and m must all be >= 1")
    params = params or GeneratorParams()
    rng = np.random.default_rng(seed)
    M = rng.uniform(-1.0, 1.0, size=(n, n)) * (params.c_scale / np.sqrt(n))
    C = M.T @ M + params.jitter * np.eye(n)
    C = (C + C.T) / 2.0
    h = rng.uniform(0.0, params.h_max, size=p)
    A = rng.uniform(-1.0, 1.0, size=(m, n))
    G = rng.uniform(-1.0, 1.0, size=(m, p))
    x0 = rng.integers(0, 2, size=n).astype(float)
    y0 = rng.uniform(0.0, params.y_max, size=p)
    slack = rng.uniform(0.0, params.slack_max, size=m)
    b = A @ x0 + G @ y0 - slack
    return MiqpInstance(n, p, m, C, h, A, G, b, Sense.GE)


_KEYS = ("n", "p", "m", "sense", "C", "h", "A", "G", "b")


def _matrix(value, name, rows, cols) -> np.ndarray:
    if not isinstance(value, list) or any(not isinstance(r, list) for r in value):
        raise InstanceSchemaError(f"{name} must be a list of rows")
    if len(value) != rows or any(len(r) != cols for r in value):
        raise InstanceValidationError([f"dimension mismatch: {name}"])
    if rows == 0:
        return np.zeros((0, cols))
    return np.array(value, dtype=float)


def _vector(value, name, size) -> np.ndarray:
    if not isinstance(value, list):
        raise InstanceSchemaError(f"{name} must be a list")
    if len(value) != size:
        raise InstanceValidationError([f"dimension mismatch: {name}"])
    return np.array(value, dtype=float)


def from_dict(data) -> MiqpInstance:
    if not isinstance(data, dict):
        raise InstanceSchemaError("top level must be an object")
    missing = [k for k in _KEYS if k not in data]
    if missing:
        raise InstanceSchemaError(f"missing field(s): {', '.join(missing)}")
    unknown = sorted(set(data) - set(_KEYS))
    if unknown:
        raise InstanceSchemaError(f"unknown field(s): {', '.join(unknown)}")
    for k in ("n", "p", "m"):
        if not isinstance(data[k], int) or isinstance(data[k], bool) or data[k] < 0:
            raise InstanceSchemaError(f"{k} must be a nonnegative integer")
    if data["sense"] not in ("GE", "LE"):
        raise InstanceSchemaError("sense must be 'GE' or 'LE'")
    n, p, m = data["n"], data["p"], data["m"]
    try:
        inst = MiqpInstance(
            n, p, m,
            _matrix(data["C"], "C", n, n),
            _vector(data["h"], "h", p),
            _matrix(data["A"], "A", m, n),
            _matrix(data["G"], "G", m, p),
            _vector(data["b"], "b", m),
            Sense(data["sense"]),
        )
    except (TypeError, ValueError) as exc:
        raise InstanceSchemaError(f"non-numeric entry: {exc}") from exc
    problems = validate(inst)
    if problems:
        raise InstanceValidationError(problems)
    return inst.symmetrized()


def read_instance(path) -> MiqpInstance:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(str(exc)) from exc
    return from_dict(data)


def write_instance(inst: MiqpInstance, path) -> None:
    # json emits repr(float), which round-trips doubles exactly
    text = json.dumps(inst.to_dict(), indent=1, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
