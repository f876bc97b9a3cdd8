import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from budgeted_assignment.exact import brute_force
from budgeted_assignment.gen import (BINARY, CAR_MILES, Line, MaxKCoverInstance, RandomParams,
                                     RlppInstance, canonical_form, cover_optimum, from_max_k_cover,
                                     random_instance, rlpp_build, rlpp_from_max_k_cover, rlpp_grid)
from budgeted_assignment.model import InstanceError, dumps_instance, validate


def test_random_instances_validate():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        params = RandomParams(num_bins=int(rng.integers(2, 6)), num_items=int(rng.integers(1, 10)),
                              incompatible_prob=float(rng.random()))
        assert validate(random_instance(params, rng)) == []


def test_random_instance_is_deterministic():
    a = random_instance(RandomParams(), 42)
    b = random_instance(RandomParams(), 42)
    assert dumps_instance(a) == dumps_instance(b)


def test_random_instance_options():
    inst = random_instance(RandomParams(zero_assign_costs=True, uniform_rewards=True), 1)
    assert not inst.has_assignment_costs() and inst.has_uniform_rewards()
    assert random_instance(RandomParams(budget=7.5), 1).budget == 7.5


def test_mkc_examples():
    mkc = MaxKCoverInstance(4, ((0, 1), (1, 2), (2, 3)), 2)
    assert cover_optimum(mkc) == 4
    assert brute_force(from_max_k_cover(mkc)).objective == 4
    full = MaxKCoverInstance(4, ((0, 1), (1, 2), (2, 3)), 3)
    assert brute_force(from_max_k_cover(full)).objective == 4
    none = MaxKCoverInstance(4, ((0, 1), (1, 2)), 0)
    assert brute_force(from_max_k_cover(none)).objective == 0


def test_mkc_rejects_bad_sets():
    with pytest.raises(ValueError):
        MaxKCoverInstance(3, ((),), 1)
    with pytest.raises(ValueError):
        MaxKCoverInstance(3, ((0, 3),), 1)


def test_canonical_form_ignores_labels():
    a = MaxKCoverInstance(3, ((0, 1), (2,)), 1)
    b = MaxKCoverInstance(3, ((0,), (1, 2)), 1)
    assert canonical_form(a) == canonical_form(b)
    assert canonical_form(a) != canonical_form(MaxKCoverInstance(3, ((0, 1, 2),), 1))


def test_rlpp_mkc_examples():
    single = rlpp_from_max_k_cover(MaxKCoverInstance(1, ((0,),), 1))
    assert single.lines == [Line((0, 1), 1, 1.0)]
    assert rlpp_build(single).lo.tolist() == [[0]]
    two = MaxKCoverInstance(2, ((0, 1), (1,)), 1)
    assert brute_force(rlpp_build(rlpp_from_max_k_cover(two))).objective == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_rlpp_intervals_are_contiguous_and_valid(seed):
    rlpp = rlpp_grid(5, 5, 6, 30, 2, CAR_MILES, 0.3, seed)
    inst = rlpp_build(rlpp)
    assert validate(inst) == []
    comp = inst.compatible
    assert np.all(inst.hi[comp] > inst.lo[comp])
    assert np.all(inst.rewards[comp] > 0) and np.all(inst.assign_costs == 0)
    for l, line in enumerate(rlpp.lines):
        assert inst.dims[l] == len(line.stops) - 1
        assert np.all(inst.capacities[l] == rlpp.capacity * line.frequency)


def _path_graph():
    # 0 - 1 - 2 - 3 with a shortcut 0 - 3 of length 2.5
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 2.5)]
    return edges


def test_car_miles_on_line_trip_saves_full_distance():
    rlpp = RlppInstance(4, _path_graph(), [Line((0, 1, 2), 1, 1.0)], 1, [(0, 2), (2, 0)],
                        CAR_MILES, 1.0)
    inst = rlpp_build(rlpp)
    assert inst.lo[0].tolist() == [0, 0] and inst.hi[0].tolist() == [2, 2]
    assert inst.rewards[0].tolist() == [2.0, 2.0]


def test_car_miles_without_savings_is_incompatible():
    # a spur line off node 0 never shortens the trip 1 -> 2
    edges = _path_graph() + [(0, 4, 1.0)]
    rlpp = RlppInstance(5, edges, [Line((0, 4), 1, 1.0)], 1, [(1, 2)], CAR_MILES, 1.0)
    inst = rlpp_build(rlpp)
    assert not inst.compatible.any() and inst.rewards.sum() == 0


def test_binary_rule_and_walk_radius():
    line = [Line((1, 2), 1, 1.0)]
    on = rlpp_build(RlppInstance(4, _path_graph(), line, 1, [(1, 3)], BINARY, 1.0))
    assert on.compatible[0, 0] and on.rewards[0, 0] == 1.0
    off = RlppInstance(4, _path_graph(), line, 1, [(0, 3)], BINARY, 1.0)
    assert not rlpp_build(off).compatible.any()
    off.walk_radius = 1.0
    assert rlpp_build(off).compatible[0, 0]


def test_disconnected_graph_is_an_error():
    rlpp = RlppInstance(4, [(0, 1, 1.0), (2, 3, 1.0)], [Line((0, 1), 1, 1.0)], 1, [(2, 3)],
                        BINARY, 1.0)
    with pytest.raises(InstanceError, match="disconnected"):
        rlpp_build(rlpp)


def test_line_must_follow_edges():
    rlpp = RlppInstance(4, _path_graph(), [Line((0, 2), 1, 1.0)], 1, [(0, 2)], BINARY, 1.0)
    with pytest.raises(InstanceError, match="not an edge"):
        rlpp_build(rlpp)


def test_rlpp_json_round_trip():
    rlpp = rlpp_grid(4, 4, 5, 20, seed=3)
    back = RlppInstance.from_dict(rlpp.to_dict())
    assert back.to_json() == rlpp.to_json()
    assert dumps_instance(rlpp_build(back)) == dumps_instance(rlpp_build(rlpp))
