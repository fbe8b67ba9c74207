"""Experiment manifests and comparison-table rendering.

A manifest records, per training run, the in-distribution and OOD test
accuracies plus provenance pointers; the report renders them as a markdown
table with per-column maxima emphasized.  Emphasis compares the *displayed*
two-decimal percentages, so values that print identically are both bold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

from ._validation import check_choice, check_probability
from .errors import CartographError

RUN_LABELS = ("pretrained-baseline", "full", "random33", "ambiguous33", "custom")

_DISPLAY = {
    "pretrained-baseline": "pretrained",
    "full": "100% train",
    "random33": "33% random",
    "ambiguous33": "33% ambiguous",
    "custom": "custom",
}


@dataclass
class RunResult:
    label: str
    run_id: str
    test_accuracy: float
    ood_accuracy: float
    selection_manifest: str | None = None
    display: str | None = None

    def __post_init__(self):
        check_choice(self.label, RUN_LABELS, "label")
        self.test_accuracy = check_probability(self.test_accuracy, "test_accuracy")
        self.ood_accuracy = check_probability(self.ood_accuracy, "ood_accuracy")

    @property
    def display_name(self) -> str:
        return self.display or _DISPLAY[self.label]


@dataclass
class ExperimentManifest:
    dataset: str
    runs: list[RunResult] = field(default_factory=list)
    seed: int | None = None
    tool_version: str | None = None

    def __post_init__(self):
        labels = [run.label for run in self.runs]
        if len(labels) != len(set(labels)):
            raise CartographError("run labels must be unique within a manifest")

    def add(self, run: RunResult) -> None:
        if any(existing.label == run.label for existing in self.runs):
            raise CartographError(f"duplicate run label {run.label!r}")
        self.runs.append(run)

    def to_json(self) -> str:
        payload = {
            "dataset": self.dataset,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "runs": [
                {
                    "label": run.label,
                    "run_id": run.run_id,
                    "test_accuracy": run.test_accuracy,
                    "ood_accuracy": run.ood_accuracy,
                    "selection_manifest": run.selection_manifest,
                    "display": run.display,
                }
                for run in self.runs
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, source: IO[str] | str | Path) -> "ExperimentManifest":
        if isinstance(source, (str, Path)):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source.read()
        try:
            obj = json.loads(text)
        except ValueError as exc:
            raise CartographError(f"malformed manifest JSON: {exc}") from None
        try:
            runs = [
                RunResult(
                    label=run["label"],
                    run_id=run.get("run_id", ""),
                    test_accuracy=run["test_accuracy"],
                    ood_accuracy=run["ood_accuracy"],
                    selection_manifest=run.get("selection_manifest"),
                    display=run.get("display"),
                )
                for run in obj["runs"]
            ]
            return cls(
                dataset=obj["dataset"],
                runs=runs,
                seed=obj.get("seed"),
                tool_version=obj.get("tool_version"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CartographError(f"invalid manifest: {exc}") from None


def _percent(value: float) -> str:
    return f"{100.0 * value:.2f}"


def format_report(manifest: ExperimentManifest) -> str:
    """Markdown comparison table; the best displayed value per accuracy
    column is bold (ties: all of them)."""
    if not manifest.runs:
        raise CartographError("manifest has no runs to report")

    test_cells = [_percent(run.test_accuracy) for run in manifest.runs]
    ood_cells = [_percent(run.ood_accuracy) for run in manifest.runs]
    best_test = _percent(max(run.test_accuracy for run in manifest.runs))
    best_ood = _percent(max(run.ood_accuracy for run in manifest.runs))

    lines = [
        "| run | Test (ID) | OOD |",
        "| --- | ---: | ---: |",
    ]
    for run, test_cell, ood_cell in zip(manifest.runs, test_cells, ood_cells):
        test_out = f"**{test_cell}**" if test_cell == best_test else test_cell
        ood_out = f"**{ood_cell}**" if ood_cell == best_ood else ood_cell
        lines.append(f"| {run.display_name} | {test_out} | {ood_out} |")
    footer = f"\ndataset: {manifest.dataset}"
    if manifest.seed is not None:
        footer += f" | seed: {manifest.seed}"
    if manifest.tool_version:
        footer += f" | cartograph {manifest.tool_version}"
    lines.append(footer)
    return "\n".join(lines) + "\n"
