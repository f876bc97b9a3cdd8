import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from budgeted_assignment.magician import (BoxDistribution, MagicianError, bernoulli_gamma,
                                          bernoulli_plan, conservative_gamma, new_magician, plan)


def certain(loss, grid=1):
    return BoxDistribution.from_losses([loss], [1.0], grid)


def test_first_box_threshold():
    m = new_magician(0.5, 2, 1)
    rec = m.present_box(certain(1))
    assert rec.theta_units == 0 and rec.r == 0.5
    assert m.mass.tolist() == [0.5, 0.5]


def test_second_box_hand_dp():
    m = new_magician(0.5, 2, 1)
    m.present_box(certain(1))
    rec = m.present_box(certain(1))
    assert rec.theta_units == 0 and rec.r == 1.0 and rec.open_prob == pytest.approx(0.5)


def test_gamma_zero_never_opens():
    m = new_magician(0.0, 3, 1)
    for _ in range(5):
        assert m.present_box(certain(1)).r == 0.0
        assert not m.decide(0.0)


def test_zero_loss_box_moves_nothing():
    m = new_magician(0.5, 4, 2)
    m.present_box(BoxDistribution.from_losses([0.5, 1.0], [0.5, 0.5], 2))
    before = m.mass.copy()
    theta = m.present_box(certain(0.0, 2)).theta_units
    assert np.allclose(m.mass[:before.size], before)
    assert m.present_box(certain(0.0, 2)).theta_units == theta


def test_constructor_rejects_bad_arguments():
    for g, k, G in [(1.0, 2, 1), (-0.1, 2, 1), (0.5, 0, 1), (0.5, 2, 0)]:
        with pytest.raises(ValueError):
            new_magician(g, k, G)


def test_off_grid_loss_rejected():
    with pytest.raises(MagicianError):
        BoxDistribution.from_losses([0.3], [1.0], 4)


def test_decide_before_present_is_an_error():
    with pytest.raises(MagicianError):
        new_magician(0.5, 2).decide(0.1)


def test_record_loss_contract():
    m = new_magician(0.5, 4, 1)
    m.present_box(certain(1))
    assert m.decide(0.1)          # w = 0 < theta or tie with coin 0.1 < r
    assert m.record_loss(0) == 0
    with pytest.raises(MagicianError):
        m.record_loss(0)          # box already accounted for
    m.present_box(certain(1))
    m.w = 5
    assert not m.decide(0.0)      # realized loss above threshold: closed regardless of coin


def test_record_loss_beyond_mana_signals_violation():
    m = new_magician(0.5, 1, 1)
    m.present_box(certain(1))
    m.decide(0.0)
    m.record_loss(1)
    m.present_box(certain(1))
    m._opened = True              # force the impossible path
    with pytest.raises(MagicianError, match="Theorem 1 violated"):
        m.record_loss(1)


def test_decide_ignores_current_loss():
    # the decision takes no loss argument: it cannot depend on the box's own realization
    m = new_magician(0.5, 2)
    m.present_box(certain(1))
    assert m.decide(0.25) is True and m.decide.__code__.co_argcount == 2


def _admissible_boxes(rng, L, G, k):
    boxes, budget = [], k * G
    for _ in range(L):
        support = rng.choice(np.arange(1, G + 1), size=min(G, int(rng.integers(1, 4))), replace=False)
        p = rng.dirichlet(np.ones(support.size))
        mean = float(support @ p)
        share = min(1.0, budget / mean * rng.random())
        budget -= share * mean
        boxes.append(BoxDistribution(np.r_[0, support], np.r_[1 - share, share * p], G))
    return boxes


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_thresholds_and_sand_bound(seed):
    rng = np.random.default_rng(seed)
    k, G = int(rng.integers(2, 11)), int(rng.integers(1, 65))
    gamma = conservative_gamma(k)
    _, _, recs = plan(gamma, k, G, _admissible_boxes(rng, int(rng.integers(2, 20)), G, k))
    for r in recs:
        assert abs(r.open_prob - gamma) <= 1e-9
        assert r.theta_units <= (k - 1) * G
        assert r.sand_distance < 1 / (1 - gamma) + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bernoulli_thresholds(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 6))
    L = int(rng.integers(2, 25))
    probs = rng.dirichlet(np.ones(L)) * k * rng.random()
    probs = np.minimum(probs, 1.0)
    gamma = bernoulli_gamma(k)
    theta, r, recs = plan(gamma, k, 1, [BoxDistribution.bernoulli(p) for p in probs])
    assert theta.max() <= k - 1
    assert all(abs(x.open_prob - gamma) <= 1e-9 for x in recs)
    vt, vr = bernoulli_plan(np.array([gamma]), np.array([k]), probs[:, None])
    assert vt[:, 0].tolist() == theta.tolist()
    assert np.allclose(vr[:, 0], r, atol=1e-13)


def test_live_frequency_matches_gamma():
    rng = np.random.default_rng(7)
    k, G = 3, 4
    gamma = conservative_gamma(k)
    boxes = [BoxDistribution.from_losses([0, 0.5, 1.0], [0.4, 0.3, 0.3], G) for _ in range(6)]
    trials = 100_000
    opened = np.zeros(len(boxes))
    for _ in range(trials // 20):
        m = new_magician(gamma, k, G)
        for i, b in enumerate(boxes):
            m.present_box(b)
            if m.decide(rng):
                opened[i] += 1
                m.record_loss(rng.choice(b.units, p=b.probs), units=True)
    n = trials // 20
    se = math.sqrt(gamma * (1 - gamma) / n)
    assert np.all(np.abs(opened / n - gamma) <= 4 * se)
