"""Benders cut pool and the exact (enumerative) master problem.

The master is  min x'Cx + t  over binary x, subject to optimality cuts
(b - Ax)'u_k <= t and feasibility cuts (b - Ax)'r_j <= 0.  For a fixed x the
best t is the upper envelope of the optimality cuts, so enumerating x is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .instance import MiqpInstance

MAX_ENUM_N = 24
CUT_TOL = 1e-7
DUPLICATE_TOL = 1e-9
TIE_TOL = 1e-9
_CHUNK = 1 << 16


class SizeCapExceeded(ValueError):
    pass


class NoFeasibleX(Exception):
    """Every binary x violates at least one feasibility cut."""


def _dedup_add(rows: List[np.ndarray], vec) -> bool:
    vec = np.asarray(vec, dtype=float).copy()
    for r in rows:
        if np.max(np.abs(r - vec)) <= DUPLICATE_TOL:
            return False
    vec.setflags(write=False)
    rows.append(vec)
    return True


@dataclass
class CutPool:
    m: int
    optimality_cuts: List[np.ndarray] = field(default_factory=list)
    feasibility_cuts: List[np.ndarray] = field(default_factory=list)

    def add_optimality(self, u) -> bool:
        """Append u unless an equal cut (L-inf 1e-9) is present. Returns True if added."""
        return _dedup_add(self.optimality_cuts, u)

    def add_feasibility(self, r) -> bool:
        return _dedup_add(self.feasibility_cuts, r)

    def __len__(self):
        return len(self.optimality_cuts) + len(self.feasibility_cuts)

    @property
    def U(self) -> np.ndarray:
        return np.array(self.optimality_cuts, dtype=float).reshape(-1, self.m)

    @property
    def R(self) -> np.ndarray:
        return np.array(self.feasibility_cuts, dtype=float).reshape(-1, self.m)

    def affine(self, inst: MiqpInstance):
        """Cut values as affine maps of x: value(x) = const - coef @ x.

        Returns (opt_const, opt_coef, feas_const, feas_coef).
        """
        U, R = self.U, self.R
        return U @ inst.b, U @ inst.A, R @ inst.b, R @ inst.A


@dataclass(frozen=True)
class MasterSolution:
    x: np.ndarray
    t: float
    objective: float


@dataclass(frozen=True)
class CutViolation:
    kind: str  # "optimality" or "feasibility"
    index: int
    residual: float


def master_objective(inst: MiqpInstance, cuts: CutPool, x, t) -> float:
    return inst.quad(x) + float(t)


def check_cuts(cuts: CutPool, inst: MiqpInstance, x, t, tol: float = CUT_TOL) -> List[CutViolation]:
    x = np.asarray(x, dtype=float)
    oc, oa, fc, fa = cuts.affine(inst)
    out = []
    for k, val in enumerate(oc - oa @ x):
        if val - t > tol:
            out.append(CutViolation("optimality", k, float(val - t)))
    for j, val in enumerate(fc - fa @ x):
        if val > tol:
            out.append(CutViolation("feasibility", j, float(val)))
    return out


def binary_block(start: int, stop: int, n: int) -> np.ndarray:
    """Rows are x for integer codes start..stop-1; x[0] is the most significant bit,
    so integer order is lexicographic order."""
    codes = np.arange(start, stop, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)


def optimal_t(cuts: CutPool, inst: MiqpInstance, X: np.ndarray, t_lower: float) -> np.ndarray:
    """Smallest t satisfying every optimality cut and t >= t_lower, per row of X."""
    oc, oa, _, _ = cuts.affine(inst)
    if oc.size == 0:
        return np.full(X.shape[0], float(t_lower))
    return np.maximum((oc[None, :] - X @ oa.T).max(axis=1), float(t_lower))


def solve_master_exact(inst: MiqpInstance, cuts: CutPool, t_lower: float = 0.0) -> MasterSolution:
    n = inst.n
    if n > MAX_ENUM_N:
        raise SizeCapExceeded(f"n={n} exceeds the enumeration cap {MAX_ENUM_N}")
    _, _, fc, fa = cuts.affine(inst)
    best_val, best_code = np.inf, -1
    total = 1 << n
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        X = binary_block(start, stop, n).astype(float)
        val = np.einsum("ij,jk,ik->i", X, inst.C, X) + optimal_t(cuts, inst, X, t_lower)
        if fc.size:
            ok = np.all(fc[None, :] - X @ fa.T <= CUT_TOL, axis=1)
            val = np.where(ok, val, np.inf)
        lo = val.min()
        if not np.isfinite(lo):
            continue
        if lo < best_val - TIE_TOL * max(1.0, abs(best_val) if np.isfinite(best_val) else 1.0):
            i = int(np.flatnonzero(val <= lo + TIE_TOL * max(1.0, abs(lo)))[0])
            best_val, best_code = float(val[i]), start + i
    if best_code < 0:
        raise NoFeasibleX("feasibility cuts exclude every binary x")
    x = binary_block(best_code, best_code + 1, n)[0]
    t = float(optimal_t(cuts, inst, x[None, :].astype(float), t_lower)[0])
    return MasterSolution(x, t, inst.quad(x) + t)
