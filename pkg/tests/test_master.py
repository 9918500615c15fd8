from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from benders_qubo.instance import MiqpInstance, generate
from benders_qubo.lp import DualKind, solve_dual_subproblem
from benders_qubo.master import (CutPool, NoFeasibleX, SizeCapExceeded, binary_block,
                                 check_cuts, master_objective, solve_master_exact)

from conftest import brute_master


def zero_a_instance(C, b):
    n, m = len(C), len(b)
    return MiqpInstance(n, 1, m, C, [1.0], np.zeros((m, n)), np.ones((m, 1)), b)


def run_exact_iterations(inst, k):
    cuts = CutPool(inst.m)
    for _ in range(k):
        ms = solve_master_exact(inst, cuts)
        dual = solve_dual_subproblem(inst, ms.x)
        if dual.kind is DualKind.EXTREME_POINT:
            cuts.add_optimality(dual.vector)
        else:
            cuts.add_feasibility(dual.vector)
    return cuts


def random_pool(inst, rng, n_opt, n_feas):
    cuts = CutPool(inst.m)
    for _ in range(n_opt):
        cuts.add_optimality(rng.uniform(0.0, 1.0, size=inst.m))
    for _ in range(n_feas):
        r = rng.uniform(0.0, 1.0, size=inst.m)
        # keep at least one x feasible: relax against the row sums
        cuts.add_feasibility(r * 0.1)
    return cuts


def test_single_cut_forces_t():
    inst = zero_a_instance(np.eye(2), [7.0])
    cuts = CutPool(1)
    cuts.add_optimality([1.0])
    ms = solve_master_exact(inst, cuts)
    assert_array_equal(ms.x, [0, 0])
    assert ms.t == 7.0
    assert ms.objective == 7.0


def test_empty_pool_clamps_t():
    inst = zero_a_instance(-np.eye(2), [0.0])
    ms = solve_master_exact(inst, CutPool(1), t_lower=0.0)
    assert_array_equal(ms.x, [1, 1])
    assert ms.t == 0.0
    assert ms.objective == -2.0


def test_check_cuts_examples():
    inst = zero_a_instance(np.eye(1), [5.0])
    assert check_cuts(CutPool(1), inst, [0], 0.0) == []
    cuts = CutPool(1)
    cuts.add_optimality([1.0])
    v = check_cuts(cuts, inst, [0], 4.0)
    assert len(v) == 1 and v[0].kind == "optimality"
    assert v[0].residual == pytest.approx(1.0)
    neg = zero_a_instance(np.eye(1), [-1.0])
    feas = CutPool(1)
    feas.add_feasibility([1.0])
    assert check_cuts(feas, neg, [0], 123.0) == []


def test_master_objective():
    inst = generate(3, 2, 2, 1)
    x = np.array([1, 0, 1])
    assert master_objective(inst, CutPool(2), x, 0.25) == pytest.approx(x @ inst.C @ x + 0.25)


def test_after_three_iterations_matches_brute_force():
    inst = generate(5, 5, 5, 42)
    cuts = run_exact_iterations(inst, 3)
    ms = solve_master_exact(inst, cuts)
    obj, bits, t = brute_master(inst, cuts)
    assert ms.objective == pytest.approx(float(obj), abs=1e-9)
    assert_array_equal(ms.x, bits)


@pytest.mark.parametrize("seed", range(15))
def test_random_pools_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    inst = generate(n, 3, 4, seed)
    cuts = random_pool(inst, rng, int(rng.integers(0, 4)), int(rng.integers(0, 3)))
    ref = brute_master(inst, cuts)
    if ref is None:
        with pytest.raises(NoFeasibleX):
            solve_master_exact(inst, cuts)
        return
    ms = solve_master_exact(inst, cuts)
    assert ms.objective == pytest.approx(float(ref[0]), abs=1e-9)
    assert ms.objective == pytest.approx(ms.x @ inst.C @ ms.x + ms.t, abs=1e-9)
    assert check_cuts(cuts, inst, ms.x, ms.t) == []


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
def test_adding_cuts_never_lowers_the_optimum(seed, k):
    rng = np.random.default_rng(seed)
    inst = generate(4, 3, 3, seed)
    cuts = CutPool(3)
    prev = solve_master_exact(inst, cuts).objective
    for _ in range(k):
        cuts.add_optimality(rng.uniform(0.0, 2.0, size=3))
        cur = solve_master_exact(inst, cuts).objective
        assert cur >= prev - 1e-12
        prev = cur


def test_ties_go_to_lexicographically_smallest_x():
    inst = zero_a_instance(np.zeros((3, 3)), [1.0])
    ms = solve_master_exact(inst, CutPool(1))
    assert_array_equal(ms.x, [0, 0, 0])
    again = solve_master_exact(inst, CutPool(1))
    assert_array_equal(ms.x, again.x)


def test_feasibility_cuts_can_exclude_everything():
    inst = zero_a_instance(np.eye(2), [1.0])
    cuts = CutPool(1)
    cuts.add_feasibility([1.0])
    with pytest.raises(NoFeasibleX):
        solve_master_exact(inst, cuts)


def test_size_cap():
    inst = zero_a_instance(np.eye(25), [1.0])
    with pytest.raises(SizeCapExceeded):
        solve_master_exact(inst, CutPool(1))


def test_pool_rejects_duplicates():
    cuts = CutPool(2)
    assert cuts.add_optimality([1.0, 2.0])
    assert not cuts.add_optimality([1.0, 2.0 + 5e-10])
    assert cuts.add_optimality([1.0, 2.0 + 1e-6])
    assert cuts.add_feasibility([1.0, 2.0])
    assert not cuts.add_feasibility([1.0, 2.0])
    assert len(cuts) == 3
    assert cuts.U.shape == (2, 2) and cuts.R.shape == (1, 2)


def test_binary_block_is_lexicographic():
    X = binary_block(0, 8, 3)
    assert_array_equal(X[1], [0, 0, 1])
    assert_array_equal(X[4], [1, 0, 0])
    keys = [tuple(r) for r in X]
    assert keys == sorted(keys)


def test_brute_force_helper_uses_exact_rationals():
    inst = zero_a_instance(np.eye(1), [0.1])
    cuts = CutPool(1)
    cuts.add_optimality([3.0])
    _, _, t = brute_master(inst, cuts)
    assert t == Fraction(3.0) * Fraction(0.1)
