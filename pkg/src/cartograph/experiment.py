"""One-command experiment pipeline: train, map, select, retrain, report.

The workflow spans five manual steps (full training, metrics, subset
selection, two retrainings, evaluation); running them by hand is where
reproducibility usually dies.  ``run_experiment`` executes the whole thing
from a single master seed and writes every artifact with provenance.

Seed derivation is additive and documented: full training uses the master
seed, the random selection uses ``seed + 1``, and the random/ambiguous
retrainings use ``seed + 2`` and ``seed + 3``.  Pass a fixed ``created_at``
to make reruns byte-identical (log headers embed it).
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict
from pathlib import Path

from ._version import __version__
from .carto import SelectionSpec, classify, read_selection, select, write_selection
from .dynamics import compute_all
from .dynlog import parse_log, utc_now_iso
from .errors import DatasetError
from .render import CurveStyle, MapStyle, render_curves, render_map
from .report import ExperimentManifest, RunResult, format_report
from .trainer import Dataset, TrainConfig, evaluate, load_dataset, save_model, train, zero_model

log = logging.getLogger("cartograph")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_provenance(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _train_run(
    dataset: Dataset,
    config: TrainConfig,
    run_dir: Path,
    run_id: str,
    dataset_name: str,
    created_at: str,
    subset_path: Path | None,
    subset_ref: str | None,
    provenance: dict,
):
    run_dir.mkdir(parents=True, exist_ok=True)
    subset = read_selection(subset_path) if subset_path is not None else None
    log_path = run_dir / "dynamics.jsonl"
    with open(log_path, "wb") as sink:
        model, curve = train(
            dataset,
            config,
            sink,
            run_id=run_id,
            dataset_name=dataset_name,
            created_at=created_at,
            subset=subset,
        )
    curve.to_csv(run_dir / "curves.csv")
    save_model(run_dir / "model.ckpt", model, extra={"run_id": run_id})
    test_acc = evaluate(model, dataset, "test")
    ood_acc = evaluate(model, dataset, "ood")
    _write_provenance(
        run_dir / "provenance.json",
        {
            **provenance,
            "run_id": run_id,
            "created_at": created_at,
            "config": asdict(config),
            "subset_manifest": subset_ref,
            "epochs_completed": len(curve),
            "test_accuracy": test_acc,
            "ood_accuracy": ood_acc,
        },
    )
    return model, curve, test_acc, ood_acc


def run_experiment(
    dataset_path: str | Path,
    out_dir: str | Path,
    seed: int = 0,
    fraction: float = 0.33,
    config: TrainConfig | None = None,
    created_at: str | None = None,
) -> ExperimentManifest:
    """Full pipeline: full-data training, data map, random and ambiguous
    selections at ``fraction``, retraining on both, and a comparison report.

    Writes everything under ``out_dir`` and returns the manifest.  The
    dataset needs all four splits; accuracy is measured on test and ood.
    """
    dataset_path = Path(dataset_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = load_dataset(dataset_path)
    for split in ("train", "validation", "test", "ood"):
        if not dataset.split(split):
            raise DatasetError(f"run-experiment needs a nonempty {split!r} split")

    base = config or TrainConfig()
    created_at = created_at if created_at is not None else utc_now_iso()
    dataset_name = dataset_path.name
    shared_provenance = {
        "dataset": str(dataset_path),
        "dataset_sha256": _sha256(dataset_path),
        "tool_version": __version__,
        "master_seed": seed,
    }

    manifest = ExperimentManifest(dataset=str(dataset_path), seed=seed, tool_version=__version__)

    baseline = zero_model(dataset.num_classes, dataset.feature_dim or base.feature_dim)
    manifest.add(
        RunResult(
            label="pretrained-baseline",
            run_id=f"baseline-seed{seed}",
            test_accuracy=evaluate(baseline, dataset, "test"),
            ood_accuracy=evaluate(baseline, dataset, "ood"),
        )
    )

    log.info("training on the full train split")
    full_config = TrainConfig(**{**asdict(base), "seed": seed})
    full_id = f"full-seed{seed}"
    _, full_curve, test_acc, ood_acc = _train_run(
        dataset, full_config, out_dir / "full", full_id, dataset_name, created_at, None, None, shared_provenance
    )
    manifest.add(RunResult(label="full", run_id=full_id, test_accuracy=test_acc, ood_accuracy=ood_acc))

    log.info("computing training-dynamics metrics")
    table = compute_all(parse_log(out_dir / "full" / "dynamics.jsonl"))
    metrics_path = out_dir / "metrics.csv"
    table.to_csv(metrics_path)
    _write_provenance(
        out_dir / "metrics.csv.meta.json",
        {**shared_provenance, "run_id": full_id, "rows": len(table)},
    )

    selections_dir = out_dir / "selections"
    selections_dir.mkdir(exist_ok=True)
    subset_paths: dict[str, Path] = {}
    for label, strategy, spec_seed in (
        ("random33", "random", seed + 1),
        ("ambiguous33", "ambiguous", seed + 1),
    ):
        spec = SelectionSpec(strategy=strategy, fraction=fraction, seed=spec_seed)
        chosen = select(table, spec)
        path = selections_dir / f"{label}.txt"
        write_selection(path, chosen, spec, run_id=full_id, extra={"tool_version": __version__})
        subset_paths[label] = path

    for label, train_seed in (("random33", seed + 2), ("ambiguous33", seed + 3)):
        log.info("retraining on %s", label)
        run_config = TrainConfig(**{**asdict(base), "seed": train_seed})
        run_id = f"{label}-seed{seed}"
        # provenance references stay relative to out_dir so reruns into
        # different directories produce identical artifact bytes
        subset_ref = f"selections/{label}.txt.manifest.json"
        _, _, test_acc, ood_acc = _train_run(
            dataset,
            run_config,
            out_dir / label,
            run_id,
            dataset_name,
            created_at,
            subset_paths[label],
            subset_ref,
            shared_provenance,
        )
        manifest.add(
            RunResult(
                label=label,
                run_id=run_id,
                test_accuracy=test_acc,
                ood_accuracy=ood_acc,
                selection_manifest=subset_ref,
            )
        )

    regions = classify(table, 0.33, 0.33, 0.33)
    (out_dir / "map.svg").write_text(render_map(table, regions, MapStyle()), encoding="utf-8")
    (out_dir / "curves.svg").write_text(
        render_curves(full_curve, CurveStyle(), run_id=full_id), encoding="utf-8"
    )

    manifest.save(out_dir / "manifest.json")
    (out_dir / "report.md").write_text(format_report(manifest), encoding="utf-8")
    return manifest
