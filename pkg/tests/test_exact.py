import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from budgeted_assignment.exact import brute_force, enumerate_configs, full_lp
from budgeted_assignment.gen import (MaxKCoverInstance, RandomParams, from_max_k_cover,
                                     random_instance)
from budgeted_assignment.model import (AssignmentSolution, Instance, InstanceError,
                                       check_feasible)


def two_items(capacity, compatible=True):
    links = [(0, 0, 0, 1, 1.0, 0.0), (0, 1, 0, 1, 1.0, 0.0)] if compatible else []
    return Instance.from_links([[capacity]], [1.0], [1, 1], links, 1.0)


def test_enumerate_examples():
    assert [c.items for c in enumerate_configs(two_items(1), 0)] == [(0,), (1,)]
    assert [c.items for c in enumerate_configs(two_items(2), 0)] == [(0,), (1,), (0, 1)]
    assert enumerate_configs(two_items(2, compatible=False), 0) == []


def test_enumerate_guard():
    links = [(0, p, 0, 1, 1.0, 0.0) for p in range(21)]
    inst = Instance.from_links([[21]], [1.0], [1] * 21, links, 1.0)
    with pytest.raises(InstanceError):
        enumerate_configs(inst, 0)


def _all_subsets(inst, l):
    cand = [p for p in range(inst.num_items) if inst.compatible[l, p]]
    out = set()
    for r in range(1, len(cand) + 1):
        for s in itertools.combinations(cand, r):
            if inst.fits(l, s):
                out.add(s)
    return out


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_enumerate_matches_subset_scan(seed):
    inst = random_instance(RandomParams(num_bins=2, num_items=7), seed)
    for l in range(2):
        assert {c.items for c in enumerate_configs(inst, l)} == _all_subsets(inst, l)


def test_brute_force_examples(reference):
    assert brute_force(reference).objective == 4
    zero = Instance(reference.capacities, reference.bin_costs, reference.lo, reference.hi,
                    reference.rewards, reference.assign_costs, reference.rho, 0.0)
    assert brute_force(zero).objective == 0
    mkc = MaxKCoverInstance(4, ((0, 1), (1, 2), (2, 3)), 2)
    assert brute_force(from_max_k_cover(mkc)).objective == 4
    mkc3 = MaxKCoverInstance(4, ((0, 1), (0, 1, 2), (1,)), 2)
    assert brute_force(from_max_k_cover(mkc3)).objective == 3


def test_full_lp_examples(reference):
    assert full_lp(reference).lp_value == pytest.approx(4.0)
    zero = Instance(reference.capacities, reference.bin_costs, reference.lo, reference.hi,
                    reference.rewards, reference.assign_costs, reference.rho, 0.0)
    assert full_lp(zero).lp_value == pytest.approx(0.0)
    assert full_lp(two_items(1)).lp_value == pytest.approx(1.0)


def _naive_optimum(inst):
    L, P = inst.num_bins, inst.num_items
    pairs = [(l, p) for l in range(L) for p in range(P) if inst.compatible[l, p]]
    best = 0.0
    for bits in itertools.product([False, True], repeat=len(pairs)):
        x = np.zeros((L, P), dtype=bool)
        for on, (l, p) in zip(bits, pairs):
            x[l, p] = on
        sol = AssignmentSolution.from_x(inst, x)
        if check_feasible(inst, sol).ok:
            best = max(best, sol.objective)
    return best


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_brute_force_matches_raw_enumeration(seed):
    inst = random_instance(RandomParams(num_bins=2, num_items=4, dims=(1, 2),
                                        budget_k=(0.8, 2.5)), seed)
    sol = brute_force(inst)
    assert sol.certificate.ok
    assert sol.objective == pytest.approx(_naive_optimum(inst))
    assert full_lp(inst).lp_value >= sol.objective - 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_brute_force_invariant_under_relabeling(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(RandomParams(num_bins=3, num_items=5), rng)
    perm = rng.permutation(inst.num_items)
    relabeled = Instance(inst.capacities, inst.bin_costs, inst.lo[:, perm], inst.hi[:, perm],
                         inst.rewards[:, perm], inst.assign_costs[:, perm], inst.rho[perm],
                         inst.budget)
    assert brute_force(relabeled).objective == pytest.approx(brute_force(inst).objective)
