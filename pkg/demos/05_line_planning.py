"""A line-planning experiment on a grid city, written out as CSV curves.

Twenty candidate bus lines and two hundred trips on an 8x8 grid. For each
budget level the baseline, alg2 and alg6 are run on shared randomness and
their best-so-far curves are exported (the first 100 trials are dropped,
as is customary for these plots).

    python demos/05_line_planning.py [out_dir]
"""
import sys
from pathlib import Path

from budgeted_assignment.gen import CAR_MILES, rlpp_build, rlpp_grid
from budgeted_assignment.harness import compare, export

out = Path(sys.argv[1] if len(sys.argv) > 1 else "line_planning_out")
for fraction in (0.15, 0.25):
    inst = rlpp_build(rlpp_grid(8, 8, 20, 200, 5, CAR_MILES, fraction, seed=9))
    result = compare(inst, ["baseline", "alg2", "alg6"], epsilon=0.2, trials=2000, seed=9)
    print(f"budget fraction {fraction}")
    print(result.report())
    for st in result.stats.values():
        export(st, out / f"budget_{fraction}", skip_first=100)
print("curves written under", out)
