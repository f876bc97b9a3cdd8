"""The gamma-conservative magician on a short sequence of loss boxes.

Each box opens with probability exactly gamma, and the cumulative loss of
the opened boxes never exceeds the mana k.
"""
import numpy as np

from budgeted_assignment.magician import BoxDistribution, conservative_gamma, new_magician, plan

k, G = 3, 4  # mana and grid: losses are multiples of 1/4
gamma = conservative_gamma(k)
boxes = [BoxDistribution.from_losses([0.0, 0.5, 1.0], [0.4, 0.3, 0.3], G) for _ in range(6)]

theta, r, records = plan(gamma, k, G, boxes)
print(f"gamma = {gamma:.4f}")
for i, rec in enumerate(records):
    print(f"box {i}: threshold {rec.theta:.2f}, tie-break prob {rec.r:.3f}, "
          f"P(open) = {rec.open_prob:.6f}, sand distance {rec.sand_distance:.3f}")

rng = np.random.default_rng(0)
opened = np.zeros(len(boxes))
runs = 20_000
for _ in range(runs):
    mage = new_magician(gamma, k, G)
    for i, box in enumerate(boxes):
        mage.present_box(box)
        if mage.decide(rng):
            opened[i] += 1
            mage.record_loss(rng.choice(box.units, p=box.probs), units=True)
print("empirical open rates:", np.round(opened / runs, 3))
