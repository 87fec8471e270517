"""Command-line interface: generate, explain, evaluate, experiment.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Flags can also be
loaded from a JSON (or, on Python 3.11+, TOML) config file via --config;
explicit flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .attribution import attribution_function
from .datagen import (
    DatasetError,
    GenConfig,
    generate_dataset,
    load_dataset,
    read_gt_map,
    write_gt_map,
)
from .explainer import explain
from .harness import (
    ExperimentConfig,
    HarnessError,
    run_experiment1,
    run_experiment2,
    run_experiment3,
)
from .predictor import BridgePredictor, OraclePredictor
from . import metrics

logger = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:
            raise UsageError(
                "TOML config files need Python 3.11+; use JSON instead"
            ) from exc
        return tomllib.loads(text)
    return json.loads(text)


def build_parser() -> _Parser:
    parser = _Parser(prog="salbench")
    parser.add_argument("--config", help="JSON/TOML file with default flag values")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a dataset with ground truth")
    gen.add_argument("--dataset", choices=["shape", "color"], required=True)
    gen.add_argument("--n", type=int, default=200, help="validation sample count")
    gen.add_argument("--n-train", type=int, default=0, help="training sample count")
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--width", type=int, default=128)
    gen.add_argument("--height", type=int, default=128)
    gen.add_argument("--no-gt-maps", action="store_true",
                     help="skip ground-truth grids (training-only datasets)")

    exp = sub.add_parser("explain", help="explain one sample and save the map")
    exp.add_argument("--data", required=True, help="dataset directory")
    exp.add_argument("--id", required=True, help="sample id, e.g. val_00000")
    exp.add_argument("--function", choices=["ssin", "suum", "class"], required=True)
    exp.add_argument("--sample-size", default="full")
    exp.add_argument("--plan-seed", type=int, default=0)
    exp.add_argument("--negatives", choices=["abs", "clip"], default="abs")
    exp.add_argument("--bridge-cmd", help="external predictor command (default: oracle)")
    exp.add_argument("--out", required=True, help="output map file")

    ev = sub.add_parser("evaluate", help="score an explanation map against ground truth")
    ev.add_argument("--data", required=True)
    ev.add_argument("--id", required=True)
    ev.add_argument("--function", choices=["ssin", "suum", "class"], required=True)
    ev.add_argument("--map", required=True, help="explanation map file")
    ev.add_argument("--bins", type=int, default=32)
    ev.add_argument("--eps", type=float, default=1e-10)

    run = sub.add_parser("experiment", help="run experiment 1, 2 or 3")
    run.add_argument("number", type=int, choices=[1, 2, 3])
    run.add_argument("--dataset", choices=["shape", "color"], required=True)
    run.add_argument("--function", choices=["ssin", "suum", "class"], required=True)
    run.add_argument("--n", type=int, default=200)
    run.add_argument("--sample-sizes", default="min,full",
                     help="comma list for experiment 1 (numbers, 'min', 'full')")
    run.add_argument("--bins", type=int, default=32)
    run.add_argument("--data", help="dataset directory (default: generate in memory)")
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--bridge-cmd", help="bridge command line (experiment 3)")
    run.add_argument("--baseline", help="experiment-1 summary.json to attach")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--negatives", choices=["abs", "clip"], default="abs")
    run.add_argument("--resume", action="store_true")
    return parser


def _find_record(dataset, sample_id):
    for i, rec in enumerate(dataset.samples):
        if rec["id"] == sample_id:
            return dataset.load(i)
    raise DatasetError(f"no sample with id {sample_id}")


def _cmd_generate(args) -> int:
    config = GenConfig(
        dataset_kind=args.dataset,
        n_train=args.n_train,
        n_val=args.n,
        width=args.width,
        height=args.height,
        master_seed=args.seed,
    )
    manifest = generate_dataset(config, args.out, write_gt_maps=not args.no_gt_maps)
    print(f"wrote {manifest}")
    return 0


def _cmd_explain(args) -> int:
    dataset = load_dataset(args.data)
    rec = _find_record(dataset, args.id)
    if args.bridge_cmd:
        predictor = BridgePredictor(args.bridge_cmd)
    else:
        predictor = OraclePredictor(rec.scene, attribution_function(args.function))
    size = None if args.sample_size == "full" else int(args.sample_size)
    try:
        saliency = explain(rec.image, rec.scene, predictor,
                           sample_size=size, plan_seed=args.plan_seed,
                           negatives=args.negatives)
    finally:
        if args.bridge_cmd:
            predictor.close()
    write_gt_map(Path(args.out), saliency)
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    dataset = load_dataset(args.data)
    rec = _find_record(dataset, args.id)
    gt_norm = metrics.normalize(rec.gt_maps[args.function])
    expl_norm = metrics.normalize(read_gt_map(Path(args.map)))
    emd_value = metrics.emd(
        metrics.to_signature(gt_norm, args.bins),
        metrics.to_signature(expl_norm, args.bins),
    )
    kl_value = metrics.kl_div(gt_norm, expl_norm, args.eps)
    print(json.dumps({"sample_id": args.id, "function": args.function,
                      "emd": emd_value, "kl": kl_value}))
    return 0


def _cmd_experiment(args) -> int:
    sizes = tuple(s.strip() for s in args.sample_sizes.split(",") if s.strip())
    config = ExperimentConfig(
        experiment=args.number,
        dataset_kind=args.dataset,
        function_kind=args.function,
        out_dir=Path(args.out),
        n_samples=args.n,
        sample_sizes=sizes,
        bins=args.bins,
        predictor_source="bridge" if args.number == 3 else "oracle",
        bridge_command=args.bridge_cmd,
        master_seed=args.seed,
        data_dir=Path(args.data) if args.data else None,
        workers=args.workers,
        negatives=args.negatives,
        baseline_path=Path(args.baseline) if args.baseline else None,
        resume=args.resume,
    )
    runner = {1: run_experiment1, 2: run_experiment2, 3: run_experiment3}[args.number]
    report = runner(config)
    for key, agg in report.aggregates.items():
        print(f"{key}: mean EMD {agg['emd']['mean']:.4f}, mean KL {agg['kl']['mean']:.4f}")
    print(f"wrote {config.out_dir / 'report.csv'}")
    return 0


def _apply_config_file(parser, argv):
    """Config-file values become parser defaults, so explicit flags win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    values = _load_config_file(argv[at + 1])
    flat = {k.replace("-", "_"): v for k, v in values.items()}
    for action_parser in parser._subparsers._group_actions[0].choices.values():
        for action in action_parser._actions:
            if action.dest in flat:
                action_parser.set_defaults(**{action.dest: flat[action.dest]})
                action.required = False
    return argv[:at] + argv[at + 2:]


def cli(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    handlers = {
        "generate": _cmd_generate,
        "explain": _cmd_explain,
        "evaluate": _cmd_evaluate,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except (UsageError, HarnessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.debug("unhandled failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(cli())


if __name__ == "__main__":
    main()
