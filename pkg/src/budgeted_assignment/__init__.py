"""Budgeted assignment of items to bins with interval capacities.

Column generation for the configuration LP, magician-based and greedy
randomized rounding, brute-force oracles, instance generators and a
Monte-Carlo harness.
"""
from .colgen import EXACT, SCALED, DualPrices, FractionalSolution, solve_relaxation
from .model import (AssignmentSolution, Configuration, Instance, InstanceError, check_feasible,
                    load_instance, save_instance, scale_budget, validate)
from .rounding import ALGORITHMS, RoundingPlan, TrialStreams

__all__ = [
    "ALGORITHMS", "EXACT", "SCALED", "AssignmentSolution", "Configuration", "DualPrices",
    "FractionalSolution", "Instance", "InstanceError", "RoundingPlan", "TrialStreams",
    "check_feasible", "load_instance", "save_instance", "scale_budget", "solve_relaxation",
    "validate",
]
