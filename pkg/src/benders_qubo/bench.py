"""Batch benchmark: convergence rate and master-solve time versus problem size."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .benders import (EbdConfig, EbdStatus, MasterBackend, StalledCycle, solve,
                      write_trace_csv)
from .instance import GeneratorParams, generate
from .master import MAX_ENUM_N

RESULT_HEADER = ["size", "trial", "backend", "converged", "iterations", "objective", "master_ms_total"]
REPORT_HEADER = ["size", "backend", "trials", "converged", "success_rate", "master_ms_mean"]


@dataclass(frozen=True)
class BenchRow:
    size: int
    trial: int
    backend: str
    converged: bool
    iterations: int
    objective: float  # nan unless converged
    master_ms_total: float


def trial_seed(seed: int, size: int, trial: int) -> int:
    ss = np.random.SeedSequence([seed & ((1 << 63) - 1), size, trial])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def run_one(size, trial, backend: MasterBackend, cfg: EbdConfig, p, m, seed,
            params: Optional[GeneratorParams] = None, trace_dir=None) -> BenchRow:
    s = trial_seed(seed, size, trial)
    inst = generate(size, p, m, s, params)
    cfg = replace(cfg, master_backend=backend, sa=replace(cfg.sa, seed=s))
    try:
        res = solve(inst, cfg)
        trace, converged = res.trace, res.status is EbdStatus.CONVERGED
        objective = res.solution.objective if converged else math.nan
        iterations = res.iterations
    except StalledCycle as exc:
        trace, converged, objective = exc.trace, False, math.nan
        iterations = len(trace)
    if trace_dir is not None:
        write_trace_csv(trace, os.path.join(trace_dir, f"trace_{size}_{trial}_{backend.value}.csv"))
    master_ms = sum(r.master_time for r in trace) * 1e3
    return BenchRow(size, trial, backend.value, converged, iterations, objective, master_ms)


def run_bench(sizes: Sequence[int], trials: int, backends: Sequence[MasterBackend],
              cfg: EbdConfig, p: int = 5, m: int = 5, seed: int = 0,
              params: Optional[GeneratorParams] = None, trace_dir=None,
              progress=None) -> List[BenchRow]:
    rows = []
    for size in sizes:
        for trial in range(trials):
            for backend in backends:
                if backend is MasterBackend.EXACT and size > MAX_ENUM_N:
                    continue
                row = run_one(size, trial, backend, cfg, p, m, seed, params, trace_dir)
                rows.append(row)
                if progress:
                    progress(row)
    return rows


def _num(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_results(rows: Iterable[BenchRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for r in rows:
            w.writerow([r.size, r.trial, r.backend, str(r.converged).lower(), r.iterations,
                        _num(r.objective), f"{r.master_ms_total:.3f}"])


def read_results(path) -> List[BenchRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            BenchRow(int(r["size"]), int(r["trial"]), r["backend"], r["converged"] == "true",
                     int(r["iterations"]), float(r["objective"]) if r["objective"] else math.nan,
                     float(r["master_ms_total"]))
            for r in csv.DictReader(fh)
        ]


def summarize(rows: Sequence[BenchRow]) -> List[dict]:
    """Per (size, backend): success rate and mean master time."""
    out = []
    keys = sorted({(r.size, r.backend) for r in rows})
    for size, backend in keys:
        sel = [r for r in rows if r.size == size and r.backend == backend]
        ok = sum(r.converged for r in sel)
        out.append({
            "size": size,
            "backend": backend,
            "trials": len(sel),
            "converged": ok,
            "success_rate": ok / len(sel),
            "master_ms_mean": float(np.mean([r.master_ms_total for r in sel])),
        })
    return out


def write_report(summary: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_HEADER, lineterminator="\n")
        w.writeheader()
        for s in summary:
            w.writerow({**s, "success_rate": f"{s['success_rate']:.4f}",
                        "master_ms_mean": f"{s['master_ms_mean']:.3f}"})


@dataclass(frozen=True)
class MannKendall:
    s: int
    var_s: float
    z: float
    p_increasing: float  # one-sided p-value against an increasing trend
    p_decreasing: float


def mann_kendall(values: Sequence[float]) -> MannKendall:
    """Mann-Kendall trend statistic with the tie-corrected variance."""
    x = np.asarray(values, dtype=float)
    n = x.size
    s = 0
    for i in range(n - 1):
        s += int(np.sign(x[i + 1:] - x[i]).sum())
    _, counts = np.unique(x, return_counts=True)
    var = (n * (n - 1) * (2 * n + 5) - sum(c * (c - 1) * (2 * c + 5) for c in counts)) / 18.0
    if var <= 0:
        return MannKendall(s, var, 0.0, 1.0, 1.0)
    # continuity correction
    z = (s - np.sign(s)) / math.sqrt(var)
    upper = 0.5 * math.erfc(z / math.sqrt(2.0))
    return MannKendall(s, var, z, upper, 1.0 - upper)
