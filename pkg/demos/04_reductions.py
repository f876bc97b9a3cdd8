"""Max-k-cover as a budgeted assignment problem, two ways.

The direct reduction makes each set a bin; the line-planning reduction
makes each set a bus line on a path graph and each element a trip. Both
exact optima must equal the best cover.
"""
from budgeted_assignment.exact import brute_force, full_lp
from budgeted_assignment.gen import (MaxKCoverInstance, cover_optimum, from_max_k_cover,
                                     rlpp_build, rlpp_from_max_k_cover)

mkc = MaxKCoverInstance(n=5, sets=((0, 1, 2), (2, 3), (3, 4), (0, 4)), k=2)
print("best 2-cover covers", cover_optimum(mkc), "elements")

direct = from_max_k_cover(mkc)
best = brute_force(direct)
print("direct reduction: optimum", best.objective, "open bins", best.y.nonzero()[0].tolist(),
      "LP bound", round(full_lp(direct).lp_value, 3))

rlpp = rlpp_from_max_k_cover(mkc)
print(f"line-planning reduction: {rlpp.num_nodes} nodes, {len(rlpp.lines)} lines, "
      f"{len(rlpp.trips)} trips")
print("  optimum", brute_force(rlpp_build(rlpp)).objective)
