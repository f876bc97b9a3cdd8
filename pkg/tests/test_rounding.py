import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from budgeted_assignment.colgen import EXACT, SCALED, FractionalSolution, solve_relaxation, zero_solution
from budgeted_assignment.gen import RandomParams, random_instance
from budgeted_assignment.model import (Configuration, Instance, InstanceError, check_feasible,
                                       check_feasible_batch, scale_budget)
from budgeted_assignment.rounding import (DIRECT, DISCARDED, GREEDY_FALLBACK, MAGICIAN_FALLBACK,
                                          RoundingPlan, TrialStreams, alg1_magician_round,
                                          alg2_greedy_round, alg6_modified_round,
                                          alg_baseline_round, analysis_alg3, analysis_alg4_uniform,
                                          prune_rho, round_once, sample_configurations,
                                          trial_streams)

EPS = 0.25


def handmade(inst, picks, mode=SCALED, epsilon=EPS):
    """A fractional point from ``[(bin, items, value), ...]``; its LP bookkeeping is not checked."""
    sc = scale_budget(inst)
    cols = [Configuration.make(inst, l, items) for l, items, _ in picks]
    vals = np.array([v for _, _, v in picks], dtype=float)
    reward = sum(inst.config_reward(c.bin, c.items) * v for c, v in zip(cols, vals))
    used = sum(c.cost * v for c, v in zip(cols, vals)) / sc.cost_scale
    side = sc.k if mode == EXACT else sc.k * (1 - epsilon)
    return FractionalSolution(cols, vals, reward, used, side, sc.k, sc.cost_scale, inst.num_bins,
                              mode, None if mode == EXACT else epsilon)


def unit_bins(n, budget, rewards=None):
    """``n`` bins of cost 1, each holding its own single item."""
    rewards = rewards or [1.0] * n
    links = [(l, l, 0, 1, rewards[l], 0.0) for l in range(n)]
    return Instance.from_links([[1]] * n, [1.0] * n, [1] * n, links, budget)


# --- sampling --------------------------------------------------------------------

def test_sampling_degenerate_bins():
    inst = unit_bins(2, 2.0)
    sol = handmade(inst, [(0, [0], 1.0)])
    for t in range(50):
        s = sample_configurations(sol, TrialStreams(3, t))
        assert s.items == [(0,), ()]
        assert s.choice.tolist() == [0, -1]


def test_sampling_half_half_frequencies():
    links = [(0, 0, 0, 1, 1.0, 0.0), (0, 1, 0, 1, 1.0, 0.0)]
    inst = Instance.from_links([[1], [1]], [1.0, 1.0], [1, 1], links + [(1, 0, 0, 1, 1.0, 0.0)], 3.0)
    sol = handmade(inst, [(0, [0], 0.5), (0, [1], 0.5)])
    n = 100_000
    choice = RoundingPlan(inst, sol, "baseline").sample(trial_streams(7, n))
    first = np.mean(choice[:, 0] == 0)
    assert np.all(choice[:, 0] >= 0)
    assert abs(first - 0.5) <= 4 * np.sqrt(0.25 / n)


def test_sample_configurations_matches_batch_sampler(reference):
    sol = solve_relaxation(reference, SCALED, EPS)
    plan = RoundingPlan(reference, sol, "baseline")
    streams = trial_streams(11, 200)
    batch = plan.sample(streams)
    for t, s in enumerate(streams):
        single = sample_configurations(sol, s)
        mapped = [-1 if c < 0 else plan.columns.index(sol.columns[c]) for c in single.choice]
        assert mapped == batch[t].tolist()


# --- pruning ---------------------------------------------------------------------

def three_bin_item(rewards, rho):
    links = [(l, 0, 0, 1, v, 0.0) for l, v in enumerate(rewards)]
    return Instance.from_links([[1]] * len(rewards), [1.0] * len(rewards), [rho], links, 10.0)


def test_prune_examples():
    inst = three_bin_item([3.0, 2.0, 1.0], 2)
    assert prune_rho(inst, np.ones((3, 1), bool))[:, 0].tolist() == [True, True, False]
    inst = three_bin_item([1.0, 3.0, 2.0], 1)
    x = np.array([[True], [False], [False]])
    assert prune_rho(inst, x).tolist() == x.tolist()
    tie = three_bin_item([2.0, 2.0], 1)
    assert prune_rho(tie, np.ones((2, 1), bool))[:, 0].tolist() == [True, False]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_prune_keeps_best_bins(seed):
    rng = np.random.default_rng(seed)
    inst = random_instance(RandomParams(num_bins=5, num_items=6, rho=(1, 3)), rng)
    x = rng.random((5, 6)) < 0.6
    out = prune_rho(inst, x)
    assert np.all(out <= x)
    for p in range(6):
        kept = np.nonzero(out[:, p])[0]
        assert len(kept) == min(int(x[:, p].sum()), int(inst.rho[p]))
        dropped = np.nonzero(x[:, p] & ~out[:, p])[0]
        if dropped.size and kept.size:
            assert inst.rewards[kept, p].min() >= inst.rewards[dropped, p].max()
    # batched form agrees with the single form
    xb = np.stack([x, ~x])
    assert np.array_equal(prune_rho(inst, xb)[0], out)


# --- algorithm contracts ----------------------------------------------------------

@pytest.mark.parametrize("alg", ["alg1", "baseline", "alg6", "alg3", "alg4"])
def test_zero_solution_rounds_to_empty(alg):
    inst = unit_bins(3, 2.0)
    sol = zero_solution(inst, SCALED, EPS, k=2.0)
    out = round_once(inst, sol, alg, 5, EPS)
    assert out.objective == 0 and not out.solution.y.any()
    assert out.path == ("magician" if alg in ("alg3", "alg4") else "direct")


def test_zero_exact_solution_alg2():
    inst = unit_bins(3, 2.0)
    out = alg2_greedy_round(inst, zero_solution(inst, EXACT, None, k=2.0), 5)
    assert out.objective == 0 and out.path == "direct"


def test_magician_algorithms_refuse_small_k():
    inst = unit_bins(2, 1.0)
    sol = solve_relaxation(inst, SCALED, EPS)
    for fn in (alg1_magician_round, analysis_alg3):
        with pytest.raises(InstanceError, match="use exact or greedy algorithm"):
            fn(inst, sol, EPS, 0)


def test_greedy_algorithms_refuse_assignment_costs():
    inst = Instance.from_links([[1], [1]], [1.0, 1.0], [1], [(0, 0, 0, 1, 1.0, 0.5)], 3.0)
    sol = solve_relaxation(inst, EXACT)
    with pytest.raises(InstanceError, match="Algorithm 2 requires zero assignment costs"):
        alg2_greedy_round(inst, sol, 0)


def test_alg4_refuses_nonuniform_rewards(reference):
    sol = solve_relaxation(reference, SCALED, EPS)
    with pytest.raises(InstanceError, match="uniform rewards"):
        analysis_alg4_uniform(reference, sol, EPS, 0)


def test_greedy_fallback_prefers_higher_ratio():
    inst = unit_bins(2, 1.0, rewards=[1.0, 4.0])
    # both bins always sampled, so the direct assignment costs 2 > B = 1
    sol = handmade(inst, [(0, [0], 1.0), (1, [1], 1.0)], mode=EXACT)
    out = alg2_greedy_round(inst, sol, 0)
    assert out.path == "greedy-fallback"
    assert out.solution.y.tolist() == [False, True]
    assert out.objective == 4.0


def test_alg4_keeps_highest_sampled_bin():
    links = [(l, 0, 0, 1, 1.0, 0.0) for l in range(5)]
    inst = Instance.from_links([[1]] * 5, [1.0] * 5, [1], links, 10.0)
    plan = RoundingPlan(inst, handmade(inst, [(l, [0], 0.2) for l in range(5)]), "alg4")
    x0 = np.zeros((1, 5, 1), bool)
    x0[0, [1, 4], 0] = True
    kept = plan._alg4(x0, np.ones((1, 5), bool))
    assert np.nonzero(kept[0, :, 0])[0].tolist() == [4]


def test_baseline_discards_and_alg6_recovers():
    inst = unit_bins(3, 2.0)
    sol = handmade(inst, [(l, [l], 0.5) for l in range(3)])
    streams = trial_streams(1, 400)
    base = RoundingPlan(inst, sol, "baseline").run(streams)
    mod = RoundingPlan(inst, sol, "alg6").run(streams)
    magic = RoundingPlan(inst, sol, "alg1").run(streams)
    everything = np.all(base.choice >= 0, axis=1)
    assert everything.any()
    assert np.array_equal(base.path == DISCARDED, everything)
    assert np.all(base.objective[everything] == 0)
    assert np.all(mod.path[everything] == GREEDY_FALLBACK)
    assert np.all(mod.objective[everything] == 2.0)
    assert np.all(magic.path[everything] == MAGICIAN_FALLBACK)
    ok = ~everything
    assert np.array_equal(base.x[ok], mod.x[ok]) and np.all(mod.path[ok] == DIRECT)
    assert np.all(check_feasible_batch(inst, mod.x, mod.y))
    assert np.all(check_feasible_batch(inst, magic.x, magic.y))


# --- properties over random instances ---------------------------------------------

def _random_pair(seed, uniform=False):
    params = RandomParams(num_bins=5, num_items=8, zero_assign_costs=True, uniform_rewards=uniform,
                          budget_k=(2.0, 4.0))
    inst = random_instance(params, seed)
    return inst, solve_relaxation(inst, SCALED, EPS)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_all_algorithms_feasible(seed):
    inst, sol = _random_pair(seed, uniform=True)
    exact = solve_relaxation(inst, EXACT)
    streams = trial_streams(seed, 300)
    for alg in ("alg1", "alg2", "baseline", "alg6", "alg3", "alg4"):
        out = RoundingPlan(inst, exact if alg == "alg2" else sol, alg, EPS).run(streams)
        kept = out.path != DISCARDED
        assert np.all(check_feasible_batch(inst, out.x[kept], out.y[kept]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_shared_randomness_dominance(seed):
    inst, sol = _random_pair(seed)
    streams = trial_streams(seed, 300)
    run = {a: RoundingPlan(inst, sol, a, EPS).run(streams) for a in ("alg1", "alg3", "baseline", "alg6")}
    assert np.all(run["alg6"].objective >= run["baseline"].objective - 1e-9)
    assert np.all(run["alg1"].objective >= run["alg3"].objective - 1e-9)
    # alg3 keeps a subset of the sampled sets of bins the budget magician opened
    plan3 = RoundingPlan(inst, sol, "alg3", EPS)
    x0 = plan3._tentative(run["alg3"].choice)
    assert np.all(run["alg3"].x <= (x0 & run["alg3"].z[:, :, None]))
    assert np.array_equal(run["alg1"].z, run["alg3"].z)


def test_single_trial_wrappers_are_deterministic_and_feasible(reference):
    sol = solve_relaxation(reference, SCALED, EPS)
    for fn in (alg1_magician_round, alg6_modified_round, analysis_alg3):
        a, b = fn(reference, sol, EPS, 99), fn(reference, sol, EPS, 99)
        assert a.path == b.path and a.objective == b.objective
        assert np.array_equal(a.solution.x, b.solution.x)
        assert check_feasible(reference, a.solution).ok
    out = alg_baseline_round(reference, sol, TrialStreams(99))
    assert out.sampled.seed == 99
    assert all(c < 0 or sol.columns[c].bin == l for l, c in enumerate(out.sampled.choice))


def test_batch_results_do_not_depend_on_chunking(reference):
    sol = solve_relaxation(reference, SCALED, EPS)
    plan = RoundingPlan(reference, sol, "alg1")
    whole = plan.run(trial_streams(4, range(100)))
    parts = [plan.run(trial_streams(4, range(a, a + 25))) for a in range(0, 100, 25)]
    assert np.array_equal(whole.objective, np.concatenate([p.objective for p in parts]))
    assert np.array_equal(whole.z, np.concatenate([p.z for p in parts]))
