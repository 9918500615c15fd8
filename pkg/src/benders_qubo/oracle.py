"""Direct MIQP solve by enumerating x and solving the continuous LP in y."""

from __future__ import annotations

import numpy as np

from .instance import MiqpInstance, MixedSolution
from .lp import InfeasibleSubproblem, recover_y
from .master import MAX_ENUM_N, TIE_TOL, SizeCapExceeded, binary_block


class Infeasible(Exception):
    """No binary x admits a feasible y."""


def solve_direct(inst: MiqpInstance) -> MixedSolution:
    if inst.n > MAX_ENUM_N:
        raise SizeCapExceeded(f"n={inst.n} exceeds the enumeration cap {MAX_ENUM_N}")
    work = inst.normalized()
    best = None
    for code in range(1 << inst.n):
        x = binary_block(code, code + 1, inst.n)[0]
        try:
            y = recover_y(work, x)
        except InfeasibleSubproblem:
            continue
        val = work.objective(x, y)
        # strict improvement only, so ties keep the lexicographically smaller x
        if best is None or val < best[0] - TIE_TOL * max(1.0, abs(best[0])):
            best = (val, x, y)
    if best is None:
        raise Infeasible("no binary x admits a feasible continuous part")
    return MixedSolution.build(inst, best[1], best[2])
