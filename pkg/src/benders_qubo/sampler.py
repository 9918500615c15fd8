"""Simulated annealing sampler for :class:`~benders_qubo.qubo.QuboProgram`.

The sweep kernel is compiled from ``_anneal.pyx`` when available; otherwise
the pure-Python twin in ``_anneal_py`` is used. Both produce identical samples.
Set ``BENDERS_QUBO_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import _anneal_py
from .qubo import QuboProgram

if os.environ.get("BENDERS_QUBO_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _anneal as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

KERNEL = "compiled" if _compiled is not None else "python"


def get_kernel(name: Optional[str] = None):
    """Return the anneal function for "compiled", "python", or the default."""
    name = name or KERNEL
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled annealing kernel is not available")
        return _compiled.anneal
    if name == "python":
        return _anneal_py.anneal
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class SaConfig:
    num_reads: int = 3000
    num_sweeps: int = 3000
    beta_range: Optional[Tuple[float, float]] = None  # None: derived from the program
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1 or self.num_sweeps < 1:
            raise ValueError("num_reads and num_sweeps must be >= 1")
        if self.beta_range is not None:
            b0, b1 = self.beta_range
            if not 0 < b0 <= b1:
                raise ValueError("need 0 < beta_initial <= beta_final")


@dataclass(frozen=True)
class SampleSet:
    states: np.ndarray  # (k, N) uint8, sorted by energy then lexicographically
    energies: np.ndarray

    @property
    def best(self) -> Tuple[np.ndarray, float]:
        return self.states[0], float(self.energies[0])

    def __len__(self):
        return self.energies.size

    def records(self) -> List[Tuple[np.ndarray, float]]:
        return list(zip(self.states, self.energies.tolist()))


def couplings(q: QuboProgram) -> Tuple[np.ndarray, np.ndarray]:
    """Split Q into a symmetric zero-diagonal coupling matrix and the diagonal."""
    upper = np.triu(q.Q, 1)
    J = np.ascontiguousarray(upper + upper.T)
    return J, np.ascontiguousarray(np.diag(q.Q).copy())


def energy(q: QuboProgram, z) -> float:
    return q.energy(z)


def delta_energy(q: QuboProgram, z, i: int) -> float:
    """energy(z with bit i flipped) - energy(z)."""
    z = np.asarray(z, dtype=float)
    if not 0 <= i < z.size:
        raise IndexError(f"flip index {i} out of range for {z.size} bits")
    local = q.Q[i, i] + q.Q[i, :] @ z + q.Q[:, i] @ z - 2.0 * q.Q[i, i] * z[i]
    return float(local if z[i] == 0 else -local)


def beta_schedule(q: QuboProgram, num_sweeps: int,
                  beta_range: Optional[Tuple[float, float]] = None) -> np.ndarray:
    if beta_range is None:
        J, h = couplings(q)
        scale = np.abs(h) + np.abs(J).sum(axis=1)
        de_max = float(scale.max(initial=0.0))
        mags = np.abs(q.Q[q.Q != 0])
        mags = mags[mags > 1e-12 * max(de_max, 1.0)]
        if de_max <= 0 or mags.size == 0:
            beta_range = (1.0, 1.0)
        else:
            de_min = float(mags.min())
            b0 = math.log(2.0) / de_max
            b1 = max(b0, math.log(100.0 * q.N) / de_min)
            beta_range = (b0, b1)
    b0, b1 = beta_range
    if num_sweeps == 1:
        return np.array([b1])
    return np.geomspace(b0, b1, num_sweeps)


def _sorted_set(q: QuboProgram, states: np.ndarray) -> SampleSet:
    E = q.energies(states)
    keys = [states[:, i] for i in range(states.shape[1] - 1, -1, -1)] + [E]
    order = np.lexsort(keys) if states.shape[1] else np.argsort(E, kind="stable")
    return SampleSet(states[order], E[order])


def sample(q: QuboProgram, cfg: SaConfig, kernel: Optional[str] = None) -> SampleSet:
    """Run cfg.num_reads independent annealing chains.

    The all-zero state is appended as an extra candidate, so the best energy
    never exceeds the energy of the zero vector.
    """
    J, h = couplings(q)
    betas = beta_schedule(q, cfg.num_sweeps, cfg.beta_range)
    out = np.zeros((cfg.num_reads, q.N), dtype=np.uint8)
    get_kernel(kernel)(J, h, betas, cfg.num_reads, cfg.seed & ((1 << 64) - 1), out)
    states = np.vstack([out, np.zeros((1, q.N), dtype=np.uint8)])
    return _sorted_set(q, states)
