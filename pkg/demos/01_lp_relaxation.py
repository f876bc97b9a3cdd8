"""Build a small instance by hand, check a solution, and solve its configuration LP.

Two bins with one capacity slot each, two items. Item p is worth 2 in bin p
and 1 in the other bin; opening a bin costs 1 and the budget is 2.
"""
import numpy as np

from budgeted_assignment import (EXACT, SCALED, AssignmentSolution, Instance, check_feasible,
                                 scale_budget, solve_relaxation)

links = [(0, 0, 0, 1, 2.0, 0.0), (0, 1, 0, 1, 1.0, 0.0),
         (1, 0, 0, 1, 1.0, 0.0), (1, 1, 0, 1, 2.0, 0.0)]
inst = Instance.from_links([[1], [1]], [1.0, 1.0], [1, 1], links, budget=2.0)

diagonal = AssignmentSolution.from_x(inst, np.eye(2, dtype=bool))
print("diagonal assignment:", diagonal.objective, check_feasible(inst, diagonal))

scaled = scale_budget(inst)
print(f"largest configuration cost {scaled.cost_scale}, normalized budget k = {scaled.k}")

for mode, eps in ((EXACT, None), (SCALED, 0.25)):
    sol = solve_relaxation(inst, mode, eps)
    print(f"\n{mode} LP value {sol.lp_value:.4f} after {sol.iterations} pricing rounds")
    for col, x in sol.support():
        print(f"  bin {col.bin} items {col.items} cost {col.cost:g}: X = {x:.3f}")
    if sol.duals is not None:
        print("  duals q =", sol.duals.q, "lambda =", sol.duals.lam, "alpha =", sol.duals.alpha)
