"""Sparse network alignment by max-product belief propagation."""

from .graph_model import (CandidateError, CandidateSet, Graph, Problem, SolverConfig, SquareIndex,
                          build_candidates, build_problem, compute_squares)
from .evaluation import (GroundTruth, Mapping, brute_force_nap, compose_ground_truth, naive_max_product,
                         normalized_scores, objective, precision_recall)
from .matching import BipartiteInstance, solve_auction, solve_greedy
from .bp_core import SolveResult, solve

__version__ = "0.1.0"
