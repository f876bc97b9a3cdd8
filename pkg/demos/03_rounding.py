"""Every rounding algorithm on one random instance, sharing randomness.

alg1 and alg3 use the budget magician, alg2 and alg6 fall back to a greedy
prefix of bins, the baseline discards budget-violating draws, and alg4
needs rewards that do not depend on the bin.
"""
from budgeted_assignment.gen import RandomParams, random_instance
from budgeted_assignment.harness import compare

params = RandomParams(num_bins=8, num_items=20, zero_assign_costs=True, uniform_rewards=True,
                      budget_k=(2.5, 2.5))
inst = random_instance(params, seed=1)
print(f"{inst.num_bins} bins, {inst.num_items} items, budget {inst.budget:.3f}")

result = compare(inst, ["alg1", "alg2", "baseline", "alg6", "alg3", "alg4"], epsilon=0.2,
                 trials=5000, seed=7)
for name, st in result.stats.items():
    print(f"{name:8s} LP {st.lp_value:8.3f}  mean {st.mean:8.3f}  "
          f"best {st.best_so_far()[-1]:8.3f}  discarded {st.discard_rate:.1%}")
print()
print(result.report())
