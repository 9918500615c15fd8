"""Benders decomposition loop with an exact or a QUBO + annealing master."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional

import numpy as np

from .instance import MiqpInstance, MixedSolution, validate
from .lp import DualKind, recover_y, solve_dual_subproblem
from .master import CutPool, MasterSolution, NoFeasibleX, optimal_t, solve_master_exact
from .qubo import (DEFAULT_M_FRAC, DEFAULT_PENALTY, DEFAULT_SLACK_FRAC, audit,
                   compile_master, size_layout)
from .sampler import SaConfig, sample

log = logging.getLogger(__name__)

TRACE_HEADER = ["iter", "gap", "t", "dual_obj", "master_obj", "cut_type", "master_ms", "sub_ms"]


class MasterBackend(str, Enum):
    EXACT = "exact"
    QUBO_SA = "sa"


class EbdStatus(str, Enum):
    CONVERGED = "Converged"
    ITERATION_LIMIT = "IterationLimit"
    MASTER_INFEASIBLE = "MasterInfeasible"


class StalledCycle(RuntimeError):
    """The subproblem returned a cut already in the pool without closing the gap."""

    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


@dataclass(frozen=True)
class EbdConfig:
    epsilon: float = 0.5
    max_iterations: int = 100
    master_backend: MasterBackend = MasterBackend.EXACT
    sa: SaConfig = field(default_factory=SaConfig)
    penalty: float = DEFAULT_PENALTY
    max_escalations: int = 8
    t_lower: float = 0.0
    m_frac: int = DEFAULT_M_FRAC
    slack_frac: int = DEFAULT_SLACK_FRAC

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        object.__setattr__(self, "master_backend", MasterBackend(self.master_backend))


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    x: np.ndarray
    t: float
    master_objective: float
    dual_objective: float
    gap: float
    cut_type: DualKind
    master_time: float
    subproblem_time: float
    upper: float = math.inf  # x'Cx + h'y(x); inf on ray iterations
    penalty: float = math.nan
    audit_ok: bool = True
    sampled_t: float = math.nan  # t as decoded from the QUBO sample


@dataclass
class SolveTrace:
    records: List[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]


@dataclass
class EbdResult:
    status: EbdStatus
    trace: SolveTrace
    iterations: int
    solution: Optional[MixedSolution] = None

    @property
    def master_time(self) -> float:
        return sum(r.master_time for r in self.trace)


def best_lower(trace: SolveTrace) -> float:
    return max(r.master_objective for r in trace)


def best_upper(trace: SolveTrace) -> float:
    return min((r.upper for r in trace), default=math.inf)


def bound_history(trace: SolveTrace):
    """Running (best_lower, best_upper) after each iteration."""
    lo, hi, out = -math.inf, math.inf, []
    for r in trace:
        lo, hi = max(lo, r.master_objective), min(hi, r.upper)
        out.append((lo, hi))
    return out


def _derive_seed(seed: int, *parts: int) -> int:
    ss = np.random.SeedSequence([seed & ((1 << 63) - 1), *parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class _QuboMaster:
    def __init__(self, inst: MiqpInstance, cfg: EbdConfig):
        self.inst = inst
        self.cfg = cfg
        # escalated penalties carry over to later iterations
        self.penalty = cfg.penalty

    def solve(self, cuts: CutPool, iteration: int):
        cfg = self.cfg
        for attempt in range(cfg.max_escalations + 1):
            layout = size_layout(self.inst, cuts, cfg.m_frac, cfg.slack_frac, cfg.t_lower)
            prog = compile_master(self.inst, cuts, layout, self.penalty, self.penalty)
            sa_cfg = replace(cfg.sa, seed=_derive_seed(cfg.sa.seed, iteration, attempt))
            z, _ = sample(prog, sa_cfg).best
            report = audit(z, self.inst, cuts, prog)
            if not report.violations:
                break
            if attempt < cfg.max_escalations:
                self.penalty *= 2.0
        else:
            log.warning("iteration %d: sample still violates %d cut(s) at penalty %g",
                        iteration, len(report.violations), self.penalty)
        # t is continuous in the master: once x is fixed its best value is
        # known exactly, so the grid value from the sample is only kept for the record
        x = report.x
        t = float(optimal_t(cuts, self.inst, x[None, :].astype(float), cfg.t_lower)[0])
        sol = MasterSolution(x, t, self.inst.quad(x) + t)
        return sol, self.penalty, not report.violations, report.t


def solve(inst: MiqpInstance, cfg: Optional[EbdConfig] = None) -> EbdResult:
    cfg = cfg or EbdConfig()
    problems = validate(inst)
    if problems:
        raise ValueError("invalid instance: " + "; ".join(problems))
    work = inst.normalized()
    cuts = CutPool(work.m)
    trace = SolveTrace()
    qubo_master = _QuboMaster(work, cfg) if cfg.master_backend is MasterBackend.QUBO_SA else None

    for it in range(1, cfg.max_iterations + 1):
        # t >= t_lower is kept as a standing cut (valid since h'y >= 0 when
        # t_lower = 0); on the empty pool it pins t, and for positive
        # definite C the first master returns the all-zero x
        t0 = time.perf_counter()
        penalty, audit_ok, sampled_t = math.nan, True, math.nan
        if qubo_master is None:
            try:
                ms = solve_master_exact(work, cuts, cfg.t_lower)
            except NoFeasibleX:
                return EbdResult(EbdStatus.MASTER_INFEASIBLE, trace, it - 1)
        else:
            ms, penalty, audit_ok, sampled_t = qubo_master.solve(cuts, it)
        master_time = time.perf_counter() - t0
        x, t, master_obj = ms.x, ms.t, ms.objective

        t0 = time.perf_counter()
        dual = solve_dual_subproblem(work, x)
        upper = math.inf
        y = None
        if dual.kind is DualKind.EXTREME_POINT:
            y = recover_y(work, x)
            upper = work.quad(x) + float(work.h @ y)
        sub_time = time.perf_counter() - t0

        gap = abs(t - dual.value)
        trace.records.append(TraceRecord(
            it, np.array(x, dtype=np.int8), float(t), float(master_obj), dual.value, gap,
            dual.kind, master_time, sub_time, upper, penalty, audit_ok, sampled_t,
        ))

        if dual.kind is DualKind.EXTREME_POINT:
            if gap <= cfg.epsilon:
                return EbdResult(EbdStatus.CONVERGED, trace, it, MixedSolution.build(inst, x, y))
            added = cuts.add_optimality(dual.vector)
        else:
            added = cuts.add_feasibility(dual.vector)
        if not added:
            raise StalledCycle(f"iteration {it}: {dual.kind.value} cut already in the pool", trace)

    return EbdResult(EbdStatus.ITERATION_LIMIT, trace, cfg.max_iterations)


def _fmt(v: float) -> str:
    return repr(float(v))


def trace_rows(trace: SolveTrace) -> List[List[str]]:
    return [
        [str(r.iteration), _fmt(r.gap), _fmt(r.t), _fmt(r.dual_objective),
         _fmt(r.master_objective), r.cut_type.value,
         f"{r.master_time * 1e3:.3f}", f"{r.subproblem_time * 1e3:.3f}"]
        for r in trace
    ]


def write_trace_csv(trace: SolveTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(trace_rows(trace))


def read_trace_csv(path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["iter"] = int(r["iter"])
        for k in ("gap", "t", "dual_obj", "master_obj", "master_ms", "sub_ms"):
            r[k] = float(r[k])
    return rows
