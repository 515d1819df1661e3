"""Command-line front end.

Verbs:
  run <scenario.yaml>        execute a scenario, write artifacts + manifest
  plotdata <run_dir> <which> project run artifacts into plot-ready CSVs
  validate <path>            check a scenario (or graph) file
  explain-config             print the documented scenario template

Exit codes: 0 success, 1 runtime failure, 2 validation failure. Failures
emit one machine-readable JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import graphs, harness
from ._version import __version__


def _error_record(kind: str, exc: BaseException) -> str:
    return json.dumps({"record": "error", "kind": kind,
                       "error": type(exc).__name__, "message": str(exc)})


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spcg",
        description="Stochastic prize-collecting games: scenario runner.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute a scenario file")
    p_run.add_argument("scenario", help="path to the scenario YAML file")
    p_run.add_argument("--output-root", default=None,
                       help="override the output root directory")

    p_plot = sub.add_parser("plotdata", help="emit plot-ready CSVs")
    p_plot.add_argument("run_dir", help="directory written by `run`")
    p_plot.add_argument("which", choices=harness.PLOTDATA_KINDS)

    p_val = sub.add_parser("validate", help="validate a scenario or graph file")
    p_val.add_argument("path")

    sub.add_parser("explain-config", help="print the scenario template")
    return parser


def _cmd_run(args) -> int:
    out_dir = harness.run_scenario(args.scenario, output_root=args.output_root)
    print(out_dir)
    return 0


def _cmd_plotdata(args) -> int:
    out = harness.emit_plotdata(args.run_dir, args.which)
    print(out)
    return 0


def _cmd_validate(args) -> int:
    path = Path(args.path)
    if path.suffix in (".yaml", ".yml"):
        sc = harness.load_scenario(path)
        print(f"ok: scenario {sc['name']!r} "
              f"(algorithm {sc['algorithm']}, {len(sc['seeds'])} seeds)")
        return 0
    graph = graphs.load_graph(path)
    for warning in graphs.validate_graph(graph):
        print(f"warning: {warning}")
    print(f"ok: graph with {graph.n_nodes} nodes, "
          f"{len(graph.edge_list())} edges, "
          f"{len(graph.terminals)} terminal(s)")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "plotdata":
            return _cmd_plotdata(args)
        if args.verb == "validate":
            return _cmd_validate(args)
        print(harness.explain_config(), end="")
        return 0
    except (harness.ScenarioError, graphs.GraphFormatError,
            graphs.InvariantError) as exc:
        print(_error_record("validation", exc), file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: report, don't traceback
        print(_error_record("runtime", exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
