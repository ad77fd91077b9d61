"""
Command-line entry point.

Exit codes: 0 success, 1 engine error, 2 reproduction failure, 3 invalid
configuration.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from seqnet.core.config import settings
from seqnet.core.errors import ConfigError, InvalidInputError, ReproductionError, SeqnetError
from seqnet.core.logging import setup_logging
from seqnet.experiments import reproduce_nsg_table, run_config, summarize, write_run
from seqnet.models.response import EquilibriumReport
from seqnet.services.games import planner_welfare, solve_equilibrium
from seqnet.services.graph_core import new_empty
from seqnet.services.metrics import aggregate_kb_squared, lambda_max, walk_profile
from seqnet.services.planner import (
    AgentSequence,
    delegated_path,
    delegation_recipe,
    evaluate_path,
    greedy_path,
    optimal_path_dp,
)
from seqnet.services.reallocation import repair_trace
from seqnet.services.structures import enumerate_nsg
from seqnet.services.weighted_planner import WeightEdit, best_weighted_step_kb2
from seqnet.utils.config_parser import build_utility, parse_discount, parse_response
from seqnet.utils.file_manager import (
    csv_text,
    format_matrix,
    format_path,
    parse_matrix,
    parse_path,
    to_dot,
    write_text,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REPRODUCTION = 2
EXIT_CONFIG = 3


def _numbers(text: Optional[str], cast=float) -> Optional[List]:
    if text is None:
        return None
    return [cast(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise InvalidInputError(f"Cannot read {path}: {e.strerror}")


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", default=None, help="Directory for written files (default OUTPUT_DIR)")


def _add_design(p: argparse.ArgumentParser, needs_size: bool = True) -> None:
    if needs_size:
        p.add_argument("--nodes", type=int, required=True, help="Node count n")
        p.add_argument("--horizon", type=int, required=True, help="Number of periods T")
    p.add_argument("--utility", default="kb2", choices=["kb", "kb2", "diffusion", "spectral", "walks", "welfare"])
    p.add_argument("--phi", type=float, default=settings.DEFAULT_PHI, help="Decay")
    p.add_argument("--length", type=int, default=5, help="Diffusion truncation L")
    p.add_argument("--coeffs", default="1,1,1,1", help="Walk weights for lengths 1, 2, ...")
    p.add_argument("--theta", default=None, help="Comma-separated node weights")
    p.add_argument("--psi", default=None, help="Best response for the welfare utility, e.g. quad:1,0.1,0.001")
    p.add_argument("--transform", default="identity", choices=["identity", "square", "exp_minus_one"])
    p.add_argument("--discount", default="farsighted", help="farsighted | geometric:d | myopic:e | file:PATH")
    p.add_argument("--out", action="append", choices=["csv", "dot", "json"],
                   help="Report format; repeat for several (default all)")
    _add_output(p)


def _utility(args):
    return build_utility(args.utility, args.phi, args.length, _numbers(args.coeffs),
                         _numbers(args.theta), args.psi, args.transform)


def _directory(args) -> str:
    return args.output_dir or settings.OUTPUT_DIR


def _emit_design(args, mode: str, s, agents=None) -> int:
    u = _utility(args)
    D = parse_discount(args.discount, len(s))
    summary = summarize(mode, s, D, u, args.utility, args.discount, agents=agents)
    write_run(summary, s, _directory(args), args.out or ["csv", "dot", "json"])
    print(f"value={summary.value!r} final={summary.final_class}")
    return EXIT_OK


def cmd_greedy(args) -> int:
    return _emit_design(args, "greedy", greedy_path(args.nodes, args.horizon, _utility(args)))


def cmd_optimal(args) -> int:
    D = parse_discount(args.discount, args.horizon)
    s = optimal_path_dp(args.nodes, args.horizon, D, _utility(args), restrict_to_nsg=args.restrict_nsg)
    return _emit_design(args, "optimal", s)


def cmd_delegate(args) -> int:
    if args.agents:
        q = AgentSequence(tuple(_numbers(args.agents, int)))
    else:
        q = delegation_recipe(greedy_path(args.nodes, args.horizon, _utility(args)), args.agent_phi)
        logger.info(f"Delegation recipe: {list(q.q)}")
    s = delegated_path(args.nodes, args.horizon, q, args.agent_phi)
    return _emit_design(args, "delegate", s, agents=list(q.q))


def cmd_evaluate(args) -> int:
    s = parse_path(_read(args.path))
    D = parse_discount(args.discount, len(s))
    u = _utility(args)
    value = evaluate_path(s, D, u)
    summary = summarize("evaluate", s, D, u, args.utility, args.discount)
    write_run(summary, s, _directory(args), args.out or ["csv", "json"])
    print(f"value={value!r}")
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    G = parse_matrix(_read(args.graph))
    psi = parse_response(args.psi)
    trace = solve_equilibrium(G, psi, tol=args.tol, max_iter=args.max_iter)
    report = EquilibriumReport(
        converged=trace.converged,
        residual=trace.residual,
        iterations=trace.iterations,
        lambda_max=lambda_max(G),
        welfare=planner_welfare(trace.actions, args.transform),
        transform=args.transform,
    )
    directory = _directory(args)
    write_text(directory, "equilibrium.csv", trace.to_csv())
    write_text(directory, "equilibrium.json", report.model_dump_json(indent=2) + "\n")
    print(f"converged in {trace.iterations} steps, welfare={report.welfare!r}")
    return EXIT_OK


def cmd_weighted_step(args) -> int:
    G = parse_matrix(_read(args.graph)) if args.graph else new_empty(args.nodes)
    H = best_weighted_step_kb2(G, args.phi, args.resolution)
    directory = _directory(args)
    write_text(directory, "weighted_step.csv", WeightEdit.between(G, H).to_csv())
    write_text(directory, "weighted_step.dot", to_dot(H, name="step"))
    write_text(directory, "weighted_step.txt", format_matrix(H))
    print(f"b2={aggregate_kb_squared(H, args.phi)!r}")
    return EXIT_OK


def cmd_enumerate_nsg(args) -> int:
    directory = _directory(args)
    rows = []
    for class_id, G in enumerate(enumerate_nsg(args.nodes, args.links), start=1):
        degree_sequence = " ".join(str(int(d)) for d in sorted(G.w.sum(axis=1), reverse=True))
        rows.append((class_id, degree_sequence, aggregate_kb_squared(G, args.phi)))
        write_text(directory, f"nsg_{class_id:03d}.dot", to_dot(G, name=f"nsg_{class_id}"))
    write_text(directory, "index.csv", csv_text(["class_id", "degree_sequence", "b2_at_phi"], rows))
    print(f"{len(rows)} NSG classes")
    return EXIT_OK


def cmd_repair(args) -> int:
    s = parse_path(_read(args.path))
    trace = repair_trace(s, args.k_max)
    repaired = trace[-1]
    rows = []
    for t, (before, after) in enumerate(zip(s, repaired), start=1):
        a, b = walk_profile(before, args.k_max), walk_profile(after, args.k_max)
        rows.extend((t, k, a[k], b[k], b[k] - a[k]) for k in range(2, args.k_max + 1))
    directory = _directory(args)
    write_text(directory, "repaired_path.txt", format_path(repaired))
    write_text(directory, "repair.csv", csv_text(["t", "k", "before", "after", "delta"], rows))
    print(f"repaired in {len(trace) - 1} passes")
    return EXIT_OK


def cmd_run(args) -> int:
    summary = run_config(args.config, args.output_dir)
    print(json.dumps({"value": summary.value, "final_class": summary.final_class}))
    return EXIT_OK


def cmd_reproduce(args) -> int:
    report = reproduce_nsg_table(args.tolerance, args.output_dir)
    for row in report.rows:
        print(f"{row.label},{row.computed:.6f},{row.published:.4f}")
    print(f"max={report.maximizer}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqnet", description="Sequential network design engine")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("greedy", help="Myopically best link each period")
    _add_design(p)
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("optimal", help="Exact optimal path by dynamic programming")
    _add_design(p)
    p.add_argument("--restrict-nsg", action="store_true", help="Only visit nested split graphs")
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("delegate", help="Delegate each link to an agent")
    _add_design(p)
    p.add_argument("--agents", default=None, help="Comma-separated 1-based agents; default derives them from the greedy path")
    p.add_argument("--agent-phi", type=float, default=settings.DEFAULT_PHI, help="Decay of agents' own centrality")
    p.set_defaults(func=cmd_delegate)

    p = sub.add_parser("evaluate", help="Discounted value of a path file")
    _add_design(p, needs_size=False)
    p.add_argument("--path", required=True, help="Path file of matrix blocks")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("equilibrium", help="Equilibrium actions of a network game")
    p.add_argument("--graph", required=True, help="Graph in matrix text format")
    p.add_argument("--psi", required=True, help="linear:a,b | quad:a,b,c | power:a,b,g | exp:a,b")
    p.add_argument("--transform", default="identity", choices=["identity", "square", "exp_minus_one"])
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=100_000)
    _add_output(p)
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("weighted-step", help="Best one-unit weighted step for KB-squared")
    p.add_argument("--graph", default=None, help="Base graph in matrix text format")
    p.add_argument("--nodes", type=int, default=None, help="Start from the empty graph on n nodes")
    p.add_argument("--phi", type=float, default=settings.DEFAULT_PHI)
    p.add_argument("--resolution", type=int, default=4)
    _add_output(p)
    p.set_defaults(func=cmd_weighted_step)

    p = sub.add_parser("enumerate-nsg", help="One DOT file per NSG class")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--links", type=int, required=True)
    p.add_argument("--phi", type=float, default=settings.DEFAULT_PHI)
    _add_output(p)
    p.set_defaults(func=cmd_enumerate_nsg)

    p = sub.add_parser("repair", help="Turn every period of a path into an NSG")
    p.add_argument("--path", required=True, help="Path file of matrix blocks")
    p.add_argument("--k-max", type=int, default=10, help="Longest walk length compared")
    _add_output(p)
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("run", help="Execute an experiment file")
    p.add_argument("config", help="INI experiment file")
    _add_output(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="Reproduce a published comparison")
    p.add_argument("target", choices=["nsg_table", "table2"], help="table2 is an alias of nsg_table")
    p.add_argument("--tolerance", type=float, default=None, help="Gate on each value (default NSG_TABLE_TOLERANCE)")
    _add_output(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    if args.command == "weighted-step" and args.graph is None and args.nodes is None:
        parser.error("weighted-step needs --graph or --nodes")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ReproductionError as e:
        print(f"reproduction failed: {e}", file=sys.stderr)
        return EXIT_REPRODUCTION
    except SeqnetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
