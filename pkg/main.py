"""
Command line entry point.

    python main.py check-h --graph graphs/pendant.json
    python main.py soliton --p 4 --mass 1 --sample -10:10:201
    python main.py minimize --builtin tadpole --h 0.01 --L 40 --out runs/tadpole
    python main.py rearrange --mode hybrid --graph graphs/pendant.json --input runs/pendant.csv
    python main.py experiment pendant_sweep
    python main.py corpus list

Exit codes: 0 on success, 1 for invalid input, 2 for numerical failures.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

import numpy as np

import corpus
import serialize
from constants import DEFAULT_H, DEFAULT_L, DEFAULT_MASS, DEFAULT_P, ExitCode, RearrangementMode, __version__
from errors import NumericalError, ParameterError, ValidationError
from experiments import load_spec, output_root, run_experiment
from metric_graph import MetricGraph, check_condition_H, cut_edges, recognize_example1, validate
from minimizer import MinimizerConfig, minimize
from rearrangement import REARRANGEMENTS, HybridRearrangement, energy_audit
from serialize import EnergyAuditSerializer, dumps
from soliton import ProblemParams, soliton_energy, soliton_lambda, soliton_params, soliton_value

logger = logging.getLogger("groundstates")


def _graph(args: argparse.Namespace) -> MetricGraph:
    if args.builtin:
        return corpus.builtin(args.builtin)
    if args.graph:
        return serialize.load_graph_file(args.graph)
    raise ParameterError("give a graph file with --graph or a corpus name with --builtin")


def cmd_check_h(args: argparse.Namespace) -> int:
    graph = _graph(args)
    violations = validate(graph)
    if violations:
        for violation in violations:
            print(violation)
        return ExitCode.VALIDATION
    result = check_condition_H(graph)
    print(f"condition (H): {'holds' if result.holds else 'fails'}")
    if result.compact:
        print("graph is compact")
    if result.witness_edge is not None:
        print(f"witness cut-edge: {result.witness_edge}")
        print(f"component without vertices at infinity: {', '.join(sorted(result.witness_component))}")
    print(f"cut-edges: {', '.join(sorted(cut_edges(graph))) or '-'}")
    if result.holds:
        match = recognize_example1(graph)
        print(f"example family: {match.kind.name}" + (f" glue points {list(match.glue_points)}"
                                                      if match.glue_points else ""))
    return ExitCode.OK


def _sample(spec: str) -> np.ndarray:
    try:
        a, b, n = spec.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ParameterError(f"--sample expects a:b:n, got {spec!r}") from None


def cmd_soliton(args: argparse.Namespace) -> int:
    problem = ProblemParams(args.p, args.mass)
    params = soliton_params(problem.p)
    xs = _sample(args.sample)
    print(f"# p={problem.p!r} mass={problem.mu!r} energy={soliton_energy(params, problem.mu)!r} "
          f"lambda={soliton_lambda(params, problem.mu)!r}")
    print("x,phi")
    for x, value in zip(xs, soliton_value(params, problem.mu, xs)):
        print(f"{x!r},{float(value)!r}")
    return ExitCode.OK


def cmd_minimize(args: argparse.Namespace) -> int:
    graph = _graph(args)
    config = MinimizerConfig(problem=ProblemParams(args.p, args.mass), h=args.h, truncation_length=args.L,
                             use_hybrid_rearrangement=args.hybrid, seed=args.seed,
                             max_iterations=args.max_iterations, start_vertex=args.start_vertex,
                             doubling_check=args.doubling_check)
    report = minimize(graph, config)
    prefix = Path(args.out) if args.out else output_root() / "minimize"
    prefix.parent.mkdir(parents=True, exist_ok=True)
    prefix.with_suffix(".json").write_text(serialize.report_to_json(report) + "\n", encoding="utf-8")
    with open(prefix.with_suffix(".csv"), "w", encoding="utf-8", newline="") as stream:
        serialize.dump_function(report.u, stream, p=config.p, mu=config.mu)
    print(f"energy={report.energy!r} verdict={report.verdict.name} iterations={report.iterations}")
    return ExitCode.OK


def cmd_rearrange(args: argparse.Namespace) -> int:
    graph = _graph(args)
    with open(args.input, encoding="utf-8") as stream:
        u = serialize.load_function(graph, stream)
    mode = RearrangementMode(args.mode)
    if mode is RearrangementMode.HYBRID:
        operator = HybridRearrangement(args.pendant_length)
    elif args.pendant_length is not None:
        raise ParameterError("--pendant-length only applies to --mode hybrid")
    else:
        operator = REARRANGEMENTS[mode]()
    result = operator.apply(u)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        serialize.dump_function(result.output, out, p=args.p)
    finally:
        if out is not sys.stdout:
            out.close()
    audit = energy_audit(result, args.p)
    print(audit.summary(), file=sys.stderr)
    logger.debug(dumps(EnergyAuditSerializer(audit).data))
    return ExitCode.OK


def cmd_experiment(args: argparse.Namespace) -> int:
    spec = load_spec(args.name)
    if args.workers:
        spec = dataclasses.replace(spec, workers=args.workers)
    record = run_experiment(spec, args.out)
    failed = [run for run in record.runs if run.error]
    for run in record.runs:
        print(f"{run.index:3d} {run.point} energy={run.energy!r} verdict={run.verdict or '-'}")
    return ExitCode.NUMERICAL if failed and len(failed) == len(record.runs) else ExitCode.OK


def cmd_corpus(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name, entry in sorted(corpus.CORPUS.items()):
            print(f"{name:20s} (H) {'yes' if entry.satisfies_H else 'no ':3s}  {entry.description}")
        return ExitCode.OK
    if not args.name:
        raise ParameterError("corpus show needs a graph name")
    print(serialize.dump_graph(corpus.builtin(args.name)))
    return ExitCode.OK


def _add_graph_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--graph", help="graph description file (JSON)")
    group.add_argument("--builtin", help="name of a corpus graph, see `corpus list`")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groundstates", description="NLS ground states on metric graphs")
    parser.add_argument("--version", action="version", version=__version__)
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="log debug output to stderr")
    noise.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check-h", help="validate a graph and test condition (H)")
    _add_graph_options(check)
    check.set_defaults(run=cmd_check_h)

    sol = commands.add_parser("soliton", help="sample the soliton of given mass")
    sol.add_argument("--p", type=float, default=DEFAULT_P)
    sol.add_argument("--mass", type=float, default=DEFAULT_MASS)
    sol.add_argument("--sample", default="-10:10:201", help="a:b:n sample points")
    sol.set_defaults(run=cmd_soliton)

    mini = commands.add_parser("minimize", help="minimize the energy at fixed mass")
    _add_graph_options(mini)
    mini.add_argument("--p", type=float, default=DEFAULT_P)
    mini.add_argument("--mass", type=float, default=DEFAULT_MASS)
    mini.add_argument("--h", type=float, default=DEFAULT_H)
    mini.add_argument("--L", type=float, default=DEFAULT_L)
    mini.add_argument("--hybrid", action="store_true", help="interleave hybrid rearrangement steps")
    mini.add_argument("--seed", type=int, default=0)
    mini.add_argument("--max-iterations", type=int, default=MinimizerConfig.max_iterations)
    mini.add_argument("--start-vertex")
    mini.add_argument("--doubling-check", action="store_true", help="rerun at 2L to detect escaping mass")
    mini.add_argument("--out", help="output prefix; PREFIX.json and PREFIX.csv are written")
    mini.set_defaults(run=cmd_minimize)

    rea = commands.add_parser("rearrange", help="rearrange a graph function read from CSV")
    _add_graph_options(rea)
    rea.add_argument("--mode", choices=[m.value for m in RearrangementMode], required=True)
    rea.add_argument("--input", required=True, help="CSV written by minimize or rearrange")
    rea.add_argument("--pendant-length", type=float)
    rea.add_argument("--p", type=float, default=DEFAULT_P)
    rea.add_argument("--out", help="output CSV (default: stdout)")
    rea.set_defaults(run=cmd_rearrange)

    exp = commands.add_parser("experiment", help="run a builtin or file-described experiment")
    exp.add_argument("name")
    exp.add_argument("--out", help="output directory")
    exp.add_argument("--workers", type=int)
    exp.set_defaults(run=cmd_experiment)

    cor = commands.add_parser("corpus", help="list or show the builtin graphs")
    cor.add_argument("action", choices=["list", "show"])
    cor.add_argument("name", nargs="?")
    cor.set_defaults(run=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return int(args.run(args))
    except ValidationError as exc:
        logger.error("%s", exc)
        return ExitCode.VALIDATION
    except NumericalError as exc:
        logger.error("%s", exc)
        return ExitCode.NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
