"""Command-line entry point.

Subcommands wire the toolkit into one workflow: ``validate`` and ``metrics``
consume dynamics logs, ``classify``/``select`` work on metrics CSVs,
``train``/``evaluate`` run the bundled classifier, ``map``/``curves`` render
SVGs, ``noise-bench`` scores mislabel detection, ``report`` formats a
comparison table and ``run-experiment`` executes the whole pipeline from
one seed.

Exit codes: 0 success, 1 usage error, 2 data error.  Diagnostics go to
stderr; data goes to files or stdout.  Set CARTOGRAPH_LOG_LEVEL to one of
error/warn/info/debug for progress logging.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

from ._version import __version__
from .carto import (
    STRATEGIES,
    RegionAssignment,
    SelectionSpec,
    classify,
    rank_hard_to_learn,
    read_selection,
    select,
    write_selection,
)
from .datasets import make_cluster_dataset, make_demo_corpus
from .dynamics import MetricsTable, compute_all
from .dynlog import parse_log, validate_file
from .errors import CartographError
from .experiment import run_experiment
from .noisebench import NoiseSpec, eval_detection, inject_noise
from .render import CurveStyle, MapStyle, render_curves, render_map
from .report import ExperimentManifest, format_report
from .trainer import (
    CurveLog,
    TrainConfig,
    config_from_mapping,
    evaluate,
    load_dataset,
    load_model,
    save_model,
    train,
    write_dataset,
)

log = logging.getLogger("cartograph")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for data errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _setup_logging() -> None:
    level = os.environ.get("CARTOGRAPH_LOG_LEVEL", "warn").lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training options (flags > --config file > defaults)")
    group.add_argument("--config", help="key = value file with TrainConfig fields")
    group.add_argument("--epochs", type=int)
    group.add_argument("--batch-size", type=int, dest="batch_size")
    group.add_argument("--learning-rate", type=float, dest="learning_rate")
    group.add_argument("--l2", type=float)
    group.add_argument("--patience", type=int)
    group.add_argument("--improvement-epsilon", type=float, dest="improvement_epsilon")
    group.add_argument("--seed", type=int)
    group.add_argument("--feature-dim", type=int, dest="feature_dim")


def _parse_config_file(path: str) -> dict:
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CartographError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        mapping[key] = value.strip("\"'")
    return mapping


def _train_config(args) -> TrainConfig:
    config = TrainConfig()
    if getattr(args, "config", None):
        config = config_from_mapping(_parse_config_file(args.config), config)
    overrides = {
        name: getattr(args, name)
        for name in ("epochs", "batch_size", "learning_rate", "l2", "patience",
                     "improvement_epsilon", "seed", "feature_dim")
        if getattr(args, name, None) is not None
    }
    return config_from_mapping(overrides, config)


def _write_sidecar(path: Path, payload: dict) -> None:
    sidecar = path.with_name(path.name + ".meta.json")
    with open(sidecar, "w", encoding="utf-8", newline="\n") as handle:
        json.dump({"tool_version": __version__, **payload}, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _sidecar_run_id(metrics_path: str) -> str | None:
    sidecar = Path(metrics_path + ".meta.json")
    if sidecar.exists():
        try:
            return json.loads(sidecar.read_text(encoding="utf-8")).get("run_id")
        except (ValueError, OSError):
            return None
    return None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    report = validate_file(args.log, grid=not args.format_only)
    print(report.summary())
    return 0 if report.ok else 2


def _cmd_metrics(args) -> int:
    run_log = parse_log(args.log, allow_ragged=args.allow_ragged)
    table = compute_all(run_log, allow_ragged=args.allow_ragged)
    if args.out:
        table.to_csv(args.out)
        _write_sidecar(Path(args.out), {"source_log": args.log, "run_id": run_log.meta.run_id, "rows": len(table)})
        log.info("wrote %d metric rows to %s", len(table), args.out)
    else:
        buffer = io.StringIO()
        table.to_csv(buffer)
        sys.stdout.write(buffer.getvalue())
    return 0


def _cmd_classify(args) -> int:
    table = MetricsTable.from_csv(args.metrics)
    assignment = classify(table, args.f_easy, args.f_hard, args.f_ambiguous)
    sink = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(("guid", "region"))
        for guid in table.guids:
            writer.writerow((guid, assignment.regions[guid]))
    finally:
        if args.out:
            sink.close()
    if args.out:
        _write_sidecar(
            Path(args.out),
            {
                "source_metrics": args.metrics,
                "fractions": {"easy": args.f_easy, "hard": args.f_hard, "ambiguous": args.f_ambiguous},
                "counts": assignment.counts(),
            },
        )
    return 0


def _cmd_select(args) -> int:
    table = MetricsTable.from_csv(args.metrics)
    spec = SelectionSpec(strategy=args.strategy, fraction=args.fraction, seed=args.seed)
    chosen = select(table, spec)
    if args.out:
        write_selection(args.out, chosen, spec, run_id=_sidecar_run_id(args.metrics),
                        extra={"tool_version": __version__, "source_metrics": args.metrics})
        log.info("selected %d of %d instances", len(chosen), len(table))
    else:
        for guid in chosen:
            print(guid)
    return 0


def _cmd_rank(args) -> int:
    table = MetricsTable.from_csv(args.metrics)
    for guid in rank_hard_to_learn(table, args.k):
        print(guid)
    return 0


def _cmd_train(args) -> int:
    dataset = load_dataset(args.dataset)
    config = _train_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    subset = read_selection(args.subset) if args.subset else None
    run_id = args.run_id or f"run-seed{config.seed}"
    log_path = out_dir / "dynamics.jsonl"
    with open(log_path, "wb") as sink:
        model, curve = train(
            dataset,
            config,
            sink,
            run_id=run_id,
            dataset_name=Path(args.dataset).name,
            created_at=args.created_at,
            subset=subset,
            keep_best_validation=args.keep_best_validation,
        )
    curve.to_csv(out_dir / "curves.csv")
    save_model(out_dir / "model.ckpt", model, extra={"run_id": run_id})
    with open(out_dir / "provenance.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(
            {
                "run_id": run_id,
                "dataset": args.dataset,
                "config": asdict(config),
                "subset": args.subset,
                "epochs_completed": len(curve),
                "tool_version": __version__,
            },
            handle,
            indent=2,
            sort_keys=True,
        )
        handle.write("\n")
    final_val = curve.validation_accuracy[-1]
    print(f"completed {len(curve)} epochs; final validation accuracy {final_val:.4f}")
    log.info("artifacts in %s", out_dir)
    return 0


def _cmd_evaluate(args) -> int:
    model, _ = load_model(args.model)
    dataset = load_dataset(args.dataset)
    accuracy = evaluate(model, dataset, args.split)
    print(f"{accuracy:.6f}")
    return 0


def _cmd_map(args) -> int:
    table = MetricsTable.from_csv(args.metrics)
    if args.regions:
        regions = {}
        with open(args.regions, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != ["guid", "region"]:
                raise CartographError(f"unexpected regions CSV header: {header!r}")
            for row in reader:
                if row:
                    regions[row[0]] = row[1]
        assignment = RegionAssignment(regions=regions, fractions=(0.0, 0.0, 0.0))
    else:
        assignment = classify(table, args.f_easy, args.f_hard, args.f_ambiguous)
    style = MapStyle(
        sample_cap=args.sample_cap,
        sample_seed=args.sample_seed,
        correctness_bins=args.bins,
        width=args.width,
        height=args.height,
        show_density=args.density,
    )
    Path(args.out).write_text(render_map(table, assignment, style), encoding="utf-8")
    log.info("wrote %s", args.out)
    return 0


def _cmd_curves(args) -> int:
    curve = CurveLog.from_csv(args.curves)
    svg = render_curves(curve, CurveStyle(width=args.width, height=args.height), run_id=args.run_id)
    Path(args.out).write_text(svg, encoding="utf-8")
    return 0


def _cmd_noise_bench(args) -> int:
    dataset = load_dataset(args.dataset)
    config = _train_config(args)
    spec = NoiseSpec(rate=args.rate, seed=args.noise_seed)
    noisy, flipped = inject_noise(dataset, spec)
    sink = io.BytesIO()
    train(noisy, config, sink, run_id=args.run_id, dataset_name=Path(args.dataset).name,
          created_at=args.created_at)
    table = compute_all(parse_log(sink.getvalue()))
    k = args.k if args.k is not None else max(1, len(flipped))
    report = eval_detection(table, flipped, k)
    sys.stdout.write(report.to_text())
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "dynamics.jsonl").write_bytes(sink.getvalue())
        (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
        with open(out_dir / "flipped.txt", "w", encoding="utf-8", newline="\n") as handle:
            for guid in sorted(flipped):
                handle.write(guid + "\n")
        _write_sidecar(
            out_dir / "report.json",
            {"dataset": args.dataset, "noise": asdict(spec), "config": asdict(config), "k": k},
        )
    return 0


def _cmd_report(args) -> int:
    manifest = ExperimentManifest.from_json(args.manifest)
    text = format_report(manifest)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_run_experiment(args) -> int:
    config = _train_config(args)
    manifest = run_experiment(
        args.dataset,
        args.out_dir,
        seed=args.seed if args.seed is not None else 0,
        fraction=args.fraction,
        config=config,
        created_at=args.created_at,
    )
    sys.stdout.write(format_report(manifest))
    log.info("artifacts in %s", args.out_dir)
    return 0


def _cmd_make_dataset(args) -> int:
    if args.preset == "demo":
        dataset = make_demo_corpus(
            n_train=args.train,
            n_validation=args.validation,
            n_test=args.test,
            n_ood=args.ood,
            num_classes=args.classes,
            seed=args.seed,
        )
    else:
        dataset = make_cluster_dataset(
            n_train=args.train,
            n_validation=args.validation,
            n_test=args.test,
            num_classes=args.classes,
            seed=args.seed,
        )
    write_dataset(dataset, args.out)
    print(f"wrote {len(dataset.instances)} instances to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="cartograph", description=__doc__.split("\n\n")[1])
    parser.add_argument("--version", action="version", version=f"cartograph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("validate", help="check a dynamics log (streaming, bounded memory)")
    p.add_argument("--log", required=True, help="cartograph-dynlog v1 file")
    p.add_argument("--format-only", action="store_true",
                   help="skip grid/drift checks; O(1) memory in the instance count")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("metrics", help="compute confidence/variability/correctness per instance")
    p.add_argument("--log", required=True)
    p.add_argument("--out", help="metrics CSV path (stdout if omitted)")
    p.add_argument("--allow-ragged", action="store_true",
                   help="accept instances observed in only part of the epochs")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("classify", help="assign data-map regions at given fractions")
    p.add_argument("--metrics", required=True, help="metrics CSV")
    p.add_argument("--f-easy", type=float, default=0.33, dest="f_easy")
    p.add_argument("--f-hard", type=float, default=0.33, dest="f_hard")
    p.add_argument("--f-ambiguous", type=float, default=0.33, dest="f_ambiguous")
    p.add_argument("--out", help="regions CSV path (stdout if omitted)")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("select", help="pick a training subset by strategy")
    p.add_argument("--metrics", required=True)
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="guid list path; a .manifest.json sidecar is written next to it")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("rank", help="list the k most likely mislabeled instances")
    p.add_argument("--metrics", required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_cmd_rank)

    p = sub.add_parser("train", help="train the bundled classifier, capturing dynamics")
    p.add_argument("--dataset", required=True, help="JSONL dataset")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--subset", help="restrict training to the guids in this file")
    p.add_argument("--run-id", dest="run_id")
    p.add_argument("--created-at", dest="created_at",
                   help="pin the log header timestamp (for bit-reproducible reruns)")
    p.add_argument("--keep-best-validation", action="store_true", dest="keep_best_validation",
                   help="checkpoint the best-validation epoch instead of the last")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="accuracy of a checkpoint on one split")
    p.add_argument("--model", required=True, help="model.ckpt path")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", required=True, choices=("train", "validation", "test", "ood"))
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("map", help="render a data map SVG from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--regions", help="regions CSV from `classify` (otherwise classified in-process)")
    p.add_argument("--f-easy", type=float, default=0.33, dest="f_easy")
    p.add_argument("--f-hard", type=float, default=0.33, dest="f_hard")
    p.add_argument("--f-ambiguous", type=float, default=0.33, dest="f_ambiguous")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-cap", type=int, default=25000, dest="sample_cap")
    p.add_argument("--sample-seed", type=int, default=0, dest="sample_seed")
    p.add_argument("--bins", type=int, help="correctness legend bins (default: min(5, epochs+1))")
    p.add_argument("--width", type=int, default=720)
    p.add_argument("--height", type=int, default=560)
    p.add_argument("--density", action="store_true", help="draw a variability density strip")
    p.set_defaults(func=_cmd_map)

    p = sub.add_parser("curves", help="render training curves SVG from a curves CSV")
    p.add_argument("--curves", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--run-id", default="unknown", dest="run_id")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=420)
    p.set_defaults(func=_cmd_curves)

    p = sub.add_parser("noise-bench", help="plant label flips and score their recovery")
    p.add_argument("--dataset", required=True)
    p.add_argument("--rate", type=float, required=True, help="fraction of train labels to flip")
    p.add_argument("--noise-seed", type=int, default=0, dest="noise_seed")
    p.add_argument("--k", type=int, help="ranking depth (default: number of flips)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--run-id", default="noise-bench", dest="run_id")
    p.add_argument("--created-at", dest="created_at")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_noise_bench)

    p = sub.add_parser("report", help="format an experiment manifest as a markdown table")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("run-experiment", help="full pipeline: train, map, select, retrain, report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--fraction", type=float, default=0.33)
    p.add_argument("--created-at", dest="created_at")
    _add_train_flags(p)
    p.set_defaults(func=_cmd_run_experiment)

    p = sub.add_parser("make-dataset", help="generate a bundled synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=("demo", "clusters"), default="demo")
    p.add_argument("--train", type=int, default=6000)
    p.add_argument("--validation", type=int, default=800)
    p.add_argument("--test", type=int, default=800)
    p.add_argument("--ood", type=int, default=400)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--seed", type=int, default=11)
    p.set_defaults(func=_cmd_make_dataset)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse --help (0) or usage error (1)
        return int(exc.code) if exc.code is not None else 0
    _setup_logging()
    try:
        return args.func(args)
    except (CartographError, ValueError, OSError) as exc:
        print(f"cartograph: error: {exc}", file=sys.stderr)
        return 2
