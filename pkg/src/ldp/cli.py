"""Command-line interface.

Subcommands: ``run`` (one-shot discovery on a CSV), ``experiment``
(replicated benchmark from a JSON config), ``scaling`` (oracle test-count
sweep over partition-scaled graphs), and ``graphs`` (list/export the
built-in DAGs). Output files are byte-stable for a fixed seed; wall-clock
columns are zeroed unless ``--timings`` is passed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .dag import format_edge_list
from .harness import (
    ExperimentConfig,
    run_dataset,
    run_experiment,
    run_scaling,
)
from .synth import NAMED_GRAPHS, dataset_from_csv, named_graph

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_IDENTIFIABLE = 2

_REPLICATE_FIELDS = (
    "kind",
    "replicate",
    "seed",
    "accuracy",
    "z1_precision",
    "z1_recall",
    "z5_criterion",
    "vas_valid",
    "ate",
    "tests_executed",
    "cache_hits",
    "runtime_ms",
)

_SCALING_FIELDS = (
    "k",
    "n_candidates",
    "tests_executed",
    "cache_hits",
    "ratio_tests_to_z_squared",
    "runtime_ms",
)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def cmd_run(args: argparse.Namespace) -> int:
    try:
        data = dataset_from_csv(args.data, exposure=args.exposure, outcome=args.outcome)
        result = run_dataset(data, args.exposure, args.outcome, args.test, args.alpha)
    except (ValueError, OSError) as err:
        return _fail(str(err))
    payload = result.to_json_dict()
    try:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    except OSError as err:
        return _fail(str(err))
    for note in result.warnings:
        print(f"warning: {note}", file=sys.stderr)
    return EXIT_OK if result.vas is not None else EXIT_NOT_IDENTIFIABLE


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def cmd_experiment(args: argparse.Namespace) -> int:
    try:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "LDP_SEED" in os.environ:
            payload = {**payload, "seed": int(os.environ["LDP_SEED"])}
        config = ExperimentConfig.from_json_dict(payload)
        outcomes, report = run_experiment(config, workers=args.workers)
    except (ValueError, OSError, KeyError) as err:
        return _fail(str(err))

    timings = bool(args.timings)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_REPLICATE_FIELDS)
            for i, r in enumerate(outcomes):
                writer.writerow(
                    [
                        "replicate",
                        i,
                        r.seed,
                        _format_cell(r.accuracy),
                        _format_cell(r.z1_precision),
                        _format_cell(r.z1_recall),
                        _format_cell(r.z5_passed),
                        _format_cell(r.vas_valid),
                        _format_cell(r.ate),
                        r.tests_executed,
                        r.cache_hits,
                        _format_cell(r.runtime_ms if timings else 0.0),
                    ]
                )
            writer.writerow(
                [
                    "aggregate",
                    len(outcomes),
                    config.seed,
                    _format_cell(report.partition_accuracy),
                    _format_cell(report.z1_precision),
                    _format_cell(report.z1_recall),
                    _format_cell(report.z5_pass_fraction),
                    _format_cell(report.vas_valid_fraction),
                    _format_cell(report.ate_mean),
                    _format_cell(report.tests_mean),
                    "",
                    _format_cell(report.runtime_ms_mean if timings else 0.0),
                ]
            )
        metrics = report.to_json_dict()
        if not timings:
            metrics["runtime_ms_mean"] = 0.0
            metrics["ci95"].pop("runtime_ms_mean", None)
        Path(str(args.out) + ".metrics.json").write_text(
            json.dumps(metrics, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as err:
        return _fail(str(err))
    return EXIT_OK


def cmd_scaling(args: argparse.Namespace) -> int:
    try:
        rows = run_scaling(args.max_k)
    except ValueError as err:
        return _fail(str(err))
    timings = bool(args.timings)
    try:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(_SCALING_FIELDS)
            for row in rows:
                writer.writerow(
                    [
                        row.k,
                        row.n_candidates,
                        row.tests_executed,
                        row.cache_hits,
                        _format_cell(row.ratio),
                        _format_cell(row.runtime_ms if timings else 0.0),
                    ]
                )
    except OSError as err:
        return _fail(str(err))
    return EXIT_OK


def cmd_graphs(args: argparse.Namespace) -> int:
    if args.action == "list":
        for graph_id in sorted(NAMED_GRAPHS):
            g = NAMED_GRAPHS[graph_id]
            print(f"{graph_id}: {len(g.nodes)} nodes, {len(g.edges)} edges")
        return EXIT_OK
    # export
    if not args.id or not args.out:
        return _fail("graphs export requires --id and --out")
    try:
        g = named_graph(args.id)
        Path(args.out).write_text(format_edge_list(g), encoding="utf-8")
    except (ValueError, OSError) as err:
        return _fail(str(err))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldp",
        description=(
            "Causal covariate partitioning and backdoor adjustment-set "
            "discovery from conditional-independence tests"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one-shot discovery on a CSV dataset")
    p_run.add_argument("--data", required=True, help="CSV file with a header row")
    p_run.add_argument("--exposure", required=True)
    p_run.add_argument("--outcome", required=True)
    p_run.add_argument(
        "--test", choices=("fisher_z", "chi_square"), default="fisher_z"
    )
    p_run.add_argument("--alpha", type=float, default=0.01)
    p_run.add_argument("--out", required=True, help="result JSON path")
    p_run.set_defaults(fn=cmd_run)

    p_exp = sub.add_parser("experiment", help="replicated benchmark from config")
    p_exp.add_argument("--config", required=True, help="experiment config JSON")
    p_exp.add_argument("--out", required=True, help="output CSV path")
    p_exp.add_argument("--workers", type=int, default=None)
    p_exp.add_argument("--timings", action="store_true")
    p_exp.set_defaults(fn=cmd_experiment)

    p_scale = sub.add_parser("scaling", help="oracle test-count sweep")
    p_scale.add_argument("--max-k", type=int, required=True, dest="max_k")
    p_scale.add_argument("--out", required=True)
    p_scale.add_argument("--timings", action="store_true")
    p_scale.set_defaults(fn=cmd_scaling)

    p_graphs = sub.add_parser("graphs", help="list or export built-in graphs")
    p_graphs.add_argument("action", choices=("list", "export"))
    p_graphs.add_argument("--id", default=None)
    p_graphs.add_argument("--out", default=None)
    p_graphs.set_defaults(fn=cmd_graphs)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
