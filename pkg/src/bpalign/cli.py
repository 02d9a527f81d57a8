"""Command-line front end: ``bpalign solve | evaluate | compose``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict
from typing import List, Optional

from . import io
from .bp_core import solve
from .evaluation import compose_ground_truth, normalized_scores, objective, precision_recall
from .graph_model import CandidateError, SolverConfig, build_candidates, compute_squares, Problem

logger = logging.getLogger("bpalign")


class CliError(Exception):
    pass


def _add_problem_args(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--graph-a", required=required, help="graph file of A")
    p.add_argument("--graph-b", required=required, help="graph file of B")
    p.add_argument("--candidates", required=required, help="candidate file (i i' sigma_v)")
    p.add_argument("--square-weights", help="optional square weight file (i i' j j' w)")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--zeta", type=float, default=0.0, help="penalty subtracted from every node similarity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpalign", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="align two graphs")
    _add_problem_args(p, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--epsilon-growth", type=float, default=2.0)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--max-iters", type=int, default=1000)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--fill", choices=("complete", "positive"), default="complete")
    p.add_argument("--tie-break", choices=("shared", "first"), default="shared",
                   help="who escapes the epsilon penalty on a tied maximum")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", required=True, help="mapping file to write")
    p.add_argument("--report", help="JSON run report to write")
    p.add_argument("--trace", action="store_true", help="include per-iteration (objective, epsilon) in the report")
    p.add_argument("--truth", help="ground-truth file; adds precision, recall and normalized scores to the report")

    p = sub.add_parser("evaluate", help="score a mapping against a ground truth")
    p.add_argument("--mapping", required=True)
    p.add_argument("--truth", required=True)
    _add_problem_args(p, required=False)
    p.add_argument("--output", help="JSON metrics file (stdout if omitted)")

    p = sub.add_parser("compose", help="compose a chain of version-to-version mappings")
    p.add_argument("mappings", nargs="+", help="mapping files in chain order")
    p.add_argument("--output", required=True)
    return parser


def load_problem(args) -> Problem:
    ga = io.read_graph(args.graph_a)
    gb = io.read_graph(args.graph_b)
    raw, lines = io.read_candidates(args.candidates)
    try:
        cands = build_candidates(raw, ga.node_count, gb.node_count, zeta=args.zeta)
    except CandidateError as exc:
        raise io.FormatError(args.candidates, lines[exc.index], str(exc)) from None
    sigma_e = io.read_square_weights(args.square_weights) if args.square_weights else None
    squares = compute_squares(ga, gb, cands, sigma_e)
    return Problem(ga, gb, cands, squares, sigma_e)


def cmd_solve(args) -> int:
    try:
        config = SolverConfig(alpha=args.alpha, epsilon0=args.epsilon, max_iterations=args.max_iters,
                              patience=args.patience, epsilon_growth=args.epsilon_growth,
                              message_tolerance=args.tolerance, damping=args.damping, zeta=args.zeta,
                              fill=args.fill, tie_break=args.tie_break, workers=args.workers)
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}") from None
    problem = load_problem(args)
    start = time.perf_counter()
    result = solve(problem, config)
    elapsed = time.perf_counter() - start
    io.write_mapping(result.mapping, args.output)
    logger.info("objective %.6f (%d pairs, %d sweeps, %.2fs)", result.objective, len(result.mapping),
                result.iterations_used, elapsed)
    metrics = None
    if args.truth:
        truth = io.read_ground_truth(args.truth)
        precision, recall = precision_recall(result.mapping, truth)
        metrics = {"precision": precision, "recall": recall,
                   "normalized": normalized_scores(result.mapping, truth, problem, config.alpha)}
        logger.info("precision %.4f recall %.4f", precision, recall)
    if args.report:
        report = io.RunReport(
            config=asdict(config),
            sizes={"nodes_a": problem.graph_a.node_count, "nodes_b": problem.graph_b.node_count,
                   "edges_a": problem.graph_a.edge_count, "edges_b": problem.graph_b.edge_count,
                   "candidates": len(problem.candidates), "squares": len(problem.squares)},
            result={"similarity": result.similarity, "squares": result.squares, "objective": result.objective,
                    "pairs": len(result.mapping), "iterations": result.iterations_used,
                    "converged": result.converged, "time": elapsed},
            metrics=metrics,
            history=result.history if args.trace else None,
        )
        report.dump(args.report)
    return 0


def cmd_evaluate(args) -> int:
    mapping = io.read_mapping(args.mapping)
    truth = io.read_ground_truth(args.truth)
    precision, recall = precision_recall(mapping, truth)
    metrics = {"precision": precision, "recall": recall, "pairs": len(mapping), "truth_pairs": len(truth)}
    given = [args.graph_a, args.graph_b, args.candidates]
    if any(given):
        if not all(given):
            raise CliError("--graph-a, --graph-b and --candidates must be given together")
        problem = load_problem(args)
        sim, sq, obj = objective(mapping, problem, args.alpha, strict=False)
        metrics.update(similarity=sim, squares=sq, objective=obj, alpha=args.alpha,
                       normalized=normalized_scores(mapping, truth, problem, args.alpha))
    text = json.dumps(metrics, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_compose(args) -> int:
    if len(args.mappings) < 2:
        raise CliError("compose needs at least two mapping files")
    chain = [io.read_ground_truth(p) for p in args.mappings]
    for k in range(len(chain) - 1):
        targets = {j for _, j, _ in chain[k].pairs}
        sources = {i for i, _, _ in chain[k + 1].pairs}
        if targets and sources and not targets & sources:
            logger.warning("%s and %s share no node ids: id spaces look incompatible",
                           args.mappings[k], args.mappings[k + 1])
    io.write_ground_truth(compose_ground_truth(chain), args.output)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    handler = {"solve": cmd_solve, "evaluate": cmd_evaluate, "compose": cmd_compose}[args.command]
    try:
        return handler(args)
    except (io.FormatError, CliError, ValueError, OSError) as exc:
        print(f"bpalign: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
