import itertools
from fractions import Fraction

import numpy as np
import pytest

from benders_qubo.instance import MiqpInstance
from benders_qubo.master import CutPool
from benders_qubo.qubo import BitLayout, compile_master

_criterion_lines = []


def report_criterion(number: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    _criterion_lines.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criterion_lines):
            terminalreporter.write_line(line)


def brute_master(inst, cuts, t_lower=0.0):
    """Independent master solve: every x, cut maxima compared as exact rationals."""
    U, R = cuts.U, cuts.R
    best = None
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits, dtype=float)
        rhs = [Fraction(v) for v in (inst.b - inst.A @ x)]
        if any(sum(Fraction(r) * v for r, v in zip(row, rhs)) > Fraction(1, 10**7) for row in R):
            continue
        vals = [sum(Fraction(u) * v for u, v in zip(row, rhs)) for row in U]
        t = max(vals + [Fraction(t_lower)])
        obj = Fraction(float(x @ inst.C @ x)) + t
        if best is None or obj < best[0]:
            best = (obj, bits, t)
    return best


def lp_vertices(c, M, q):
    """All basic feasible points of M lam <= q, lam >= 0, by brute force."""
    rows, k = M.shape
    full = np.vstack([M, -np.eye(k)])
    rhs = np.concatenate([q, np.zeros(k)])
    out = []
    for active in itertools.combinations(range(rows + k), k):
        sub = full[list(active)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        lam = np.linalg.solve(sub, rhs[list(active)])
        if np.all(full @ lam <= rhs + 1e-9):
            out.append(lam)
    return out


def handmade_master():
    """Three binary variables, two optimality cuts, a 14-bit QUBO.

    g1 = 2 - x1 - x2, g2 = 2 - x2 - x3; the exact master optimum is
    x = (1, 0, 1), t = 1, objective 1.8.
    """
    inst = MiqpInstance(
        3, 1, 2,
        C=np.diag([0.4, 1.2, 0.4]),
        h=np.array([1.0]),
        A=np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]]),
        G=np.array([[1.0], [1.0]]),
        b=np.array([2.0, 2.0]),
    )
    cuts = CutPool(2)
    cuts.add_optimality([1.0, 0.0])
    cuts.add_optimality([0.0, 1.0])
    layout = BitLayout(3, m_frac=1, m_pos=1, m_neg=-1, opt_slack=((-1, 2), (-1, 2)))
    return inst, cuts, layout


@pytest.fixture
def fourteen_bit():
    inst, cuts, layout = handmade_master()
    return inst, cuts, layout, compile_master(inst, cuts, layout, 0.55, 0.55)
