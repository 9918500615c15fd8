"""Dense two-phase primal simplex for  max c'lam  s.t.  M lam <= q,  lam >= 0.

Bland's rule is used for both entering and leaving choices, so the solver is
deterministic and cannot cycle in exact arithmetic. The Benders subproblems
are thin wrappers on top of :func:`solve_lp`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

import numpy as np

from .instance import MiqpInstance, Sense

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-11
DUALITY_TOL = 1e-6


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"


class NumericalBreakdown(ArithmeticError):
    """The simplex could not make progress with acceptable pivots."""


class InfeasibleSubproblem(Exception):
    """No y >= 0 satisfies G y >= b - A x for the given x."""


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    M: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        q = np.asarray(self.q, dtype=float).reshape(-1)
        M = np.asarray(self.M, dtype=float).reshape(q.size, c.size)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(c)) and np.all(np.isfinite(q))):
            raise ValueError("LP data must be finite")


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    point: Optional[np.ndarray] = None
    ray: Optional[np.ndarray] = None
    objective: Optional[float] = None


class _Tableau:
    def __init__(self, T, rhs, basis):
        self.T = T
        self.rhs = rhs
        self.basis = basis

    def pivot(self, row, col):
        piv = self.T[row, col]
        if abs(piv) < BREAKDOWN_TOL:
            raise NumericalBreakdown(f"pivot magnitude {piv:.3g} below {BREAKDOWN_TOL}")
        self.T[row] /= piv
        self.rhs[row] /= piv
        for i in range(self.T.shape[0]):
            if i != row:
                f = self.T[i, col]
                if f != 0.0:
                    self.T[i] -= f * self.T[row]
                    self.rhs[i] -= f * self.rhs[row]
        self.T[row, col] = 1.0
        self.basis[row] = col

    def run(self, cost, allowed, max_iter):
        """Maximize cost over the current basis. Returns entering column on unboundedness."""
        for _ in range(max_iter):
            reduced = cost - cost[self.basis] @ self.T
            entering = -1
            for j in allowed:
                if reduced[j] > PIVOT_TOL:
                    entering = j
                    break
            if entering < 0:
                return None
            col = self.T[:, entering]
            best_row, best_ratio = -1, np.inf
            for i in range(col.size):
                if col[i] > PIVOT_TOL:
                    ratio = self.rhs[i] / col[i]
                    if ratio < best_ratio - 1e-12 or (
                        abs(ratio - best_ratio) <= 1e-12 and self.basis[i] < self.basis[best_row]
                    ):
                        best_row, best_ratio = i, ratio
            if best_row < 0:
                return entering
            self.pivot(best_row, entering)
        raise NumericalBreakdown("simplex iteration limit reached")


def solve_lp(lp: LpProblem) -> LpOutcome:
    c, M, q = lp.c, lp.M, lp.q
    rows, k = M.shape
    flip = q < 0
    n_art = int(flip.sum())
    ncols = k + rows + n_art
    T = np.zeros((rows, ncols))
    T[:, :k] = M
    T[:, k:k + rows] = np.eye(rows)
    rhs = q.copy()
    T[flip] *= -1.0
    rhs[flip] *= -1.0
    basis = np.arange(k, k + rows)
    art_rows = np.flatnonzero(flip)
    for a, i in enumerate(art_rows):
        T[i, k + rows + a] = 1.0
        basis[i] = k + rows + a
    tab = _Tableau(T, rhs, basis)
    max_iter = 50 * (ncols + rows + 10)

    if n_art:
        cost1 = np.zeros(ncols)
        cost1[k + rows:] = -1.0
        tab.run(cost1, range(ncols), max_iter)
        infeas = -float(cost1[tab.basis] @ tab.rhs)
        if infeas > FEAS_TOL * max(1.0, float(np.abs(q).max(initial=0.0))):
            return LpOutcome(LpStatus.INFEASIBLE)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = []
        for i in range(rows):
            if tab.basis[i] >= k + rows:
                cand = np.flatnonzero(np.abs(tab.T[i, :k + rows]) > PIVOT_TOL)
                if cand.size:
                    tab.pivot(i, int(cand[0]))
                    keep.append(i)
            else:
                keep.append(i)
        keep = np.array(keep, dtype=int)
        tab = _Tableau(tab.T[keep][:, :k + rows].copy(), tab.rhs[keep].copy(), tab.basis[keep].copy())
        ncols = k + rows

    cost2 = np.zeros(ncols)
    cost2[:k] = c
    entering = tab.run(cost2, range(ncols), max_iter)
    if entering is not None:
        d = np.zeros(ncols)
        d[entering] = 1.0
        d[tab.basis] = -tab.T[:, entering]
        ray = np.maximum(d[:k], 0.0)
        scale = np.abs(ray).max(initial=0.0)
        if scale <= BREAKDOWN_TOL:
            raise NumericalBreakdown("degenerate unbounded direction")
        return LpOutcome(LpStatus.UNBOUNDED, ray=ray / scale)

    x = np.zeros(ncols)
    x[tab.basis] = tab.rhs
    point = np.maximum(x[:k], 0.0)
    return LpOutcome(LpStatus.OPTIMAL, point=point, objective=float(c @ point))


# --- Benders subproblems ---------------------------------------------------

class DualKind(str, Enum):
    EXTREME_POINT = "ExtremePoint"
    EXTREME_RAY = "ExtremeRay"


@dataclass(frozen=True)
class DualOutcome:
    kind: DualKind
    vector: np.ndarray
    value: float  # (b - A xbar)' vector


def _require_ge(inst: MiqpInstance):
    if inst.sense is not Sense.GE:
        raise ValueError("instance must be normalized to sense GE")


def solve_dual_subproblem(inst: MiqpInstance, xbar) -> DualOutcome:
    """max (b - A xbar)'lam  s.t.  G'lam <= h,  lam >= 0."""
    _require_ge(inst)
    rhs = inst.b - inst.A @ np.asarray(xbar, dtype=float)
    out = solve_lp(LpProblem(rhs, inst.G.T, inst.h))
    if out.status is LpStatus.OPTIMAL:
        return DualOutcome(DualKind.EXTREME_POINT, out.point, float(rhs @ out.point))
    if out.status is LpStatus.INFEASIBLE:
        raise NumericalBreakdown("dual subproblem reported infeasible although lam = 0 is feasible")
    # unbounded: re-solve over the normalized cone G'lam <= 0, sum(lam) <= 1
    M = np.vstack([inst.G.T, np.ones((1, inst.m))])
    q = np.zeros(inst.p + 1)
    q[-1] = 1.0
    cone = solve_lp(LpProblem(rhs, M, q))
    ray = out.ray
    if cone.status is LpStatus.OPTIMAL and cone.objective > FEAS_TOL:
        ray = cone.point / np.abs(cone.point).max()
    return DualOutcome(DualKind.EXTREME_RAY, ray, float(rhs @ ray))


def recover_y(inst: MiqpInstance, xbar) -> np.ndarray:
    """argmin h'y  s.t.  G y >= b - A xbar,  y >= 0."""
    _require_ge(inst)
    rhs = inst.b - inst.A @ np.asarray(xbar, dtype=float)
    out = solve_lp(LpProblem(-inst.h, -inst.G, -rhs))
    if out.status is LpStatus.INFEASIBLE:
        raise InfeasibleSubproblem("no y >= 0 satisfies the coupling constraints")
    if out.status is LpStatus.UNBOUNDED:
        raise NumericalBreakdown("primal subproblem unbounded despite h >= 0")
    return out.point


def ray_certificate_violations(inst: MiqpInstance, xbar, ray) -> List[str]:
    out = []
    rhs = inst.b - inst.A @ np.asarray(xbar, dtype=float)
    if np.any(ray < -FEAS_TOL):
        out.append("ray has negative entries")
    if np.any(inst.G.T @ ray > FEAS_TOL):
        out.append("G'r <= 0 violated")
    if not rhs @ ray > 0:
        out.append("(b - A xbar)'r is not positive")
    return out
