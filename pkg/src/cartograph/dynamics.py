"""Per-instance training-dynamics measures computed from a run log.

Three measures summarize how a model treated each training instance across
epochs:

* confidence  -- arithmetic mean of the gold-label probability,
* variability -- population standard deviation of that probability
  (denominator is the epoch count, **not** the epoch count minus one; many
  stats utilities default to the latter),
* correctness -- fraction of epochs whose argmax prediction equals the gold
  label, so it takes exactly ``epochs + 1`` distinct values.

When a run stopped early, the epochs actually observed are the denominator.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Sequence

import numpy as np

from .dynlog import RunLog, RunMeta
from .errors import CartographError

CSV_HEADER = ("guid", "confidence", "variability", "correctness", "epochs_used")


@dataclass(frozen=True)
class DynamicsMetrics:
    """The (confidence, variability, correctness) triple for one instance."""

    guid: str
    confidence: float
    variability: float
    correctness: float
    epochs_used: int


@dataclass
class MetricsTable:
    """One metrics row per instance, sorted by guid for deterministic output."""

    guids: list[str]
    confidence: np.ndarray
    variability: np.ndarray
    correctness: np.ndarray
    epochs_used: np.ndarray
    meta: RunMeta | None = None

    def __len__(self) -> int:
        return len(self.guids)

    def rows(self) -> Iterator[DynamicsMetrics]:
        for i, guid in enumerate(self.guids):
            yield DynamicsMetrics(
                guid=guid,
                confidence=float(self.confidence[i]),
                variability=float(self.variability[i]),
                correctness=float(self.correctness[i]),
                epochs_used=int(self.epochs_used[i]),
            )

    def row(self, guid: str) -> DynamicsMetrics:
        i = self.guids.index(guid)
        return DynamicsMetrics(
            guid=guid,
            confidence=float(self.confidence[i]),
            variability=float(self.variability[i]),
            correctness=float(self.correctness[i]),
            epochs_used=int(self.epochs_used[i]),
        )

    def to_csv(self, sink: IO[str] | str | Path) -> None:
        """Write the table as CSV with values at 9 significant digits."""
        if isinstance(sink, (str, Path)):
            with open(sink, "w", encoding="utf-8", newline="") as handle:
                self.to_csv(handle)
            return
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, guid in enumerate(self.guids):
            writer.writerow(
                (
                    guid,
                    format(self.confidence[i], ".9g"),
                    format(self.variability[i], ".9g"),
                    format(self.correctness[i], ".9g"),
                    int(self.epochs_used[i]),
                )
            )

    @classmethod
    def from_csv(cls, source: IO[str] | str | Path) -> "MetricsTable":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8", newline="") as handle:
                return cls.from_csv(handle)
        if isinstance(source, (bytes, bytearray)):
            return cls.from_csv(io.StringIO(source.decode("utf-8")))
        reader = csv.reader(source)
        try:
            header = next(reader)
        except StopIteration:
            raise CartographError("metrics CSV is empty") from None
        if tuple(header) != CSV_HEADER:
            raise CartographError(f"unexpected metrics CSV header: {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise CartographError(f"metrics CSV line {lineno}: expected 5 fields, got {len(row)}")
            try:
                rows.append((row[0], float(row[1]), float(row[2]), float(row[3]), int(row[4])))
            except ValueError as exc:
                raise CartographError(f"metrics CSV line {lineno}: {exc}") from None
        rows.sort(key=lambda r: r[0])
        return cls(
            guids=[r[0] for r in rows],
            confidence=np.asarray([r[1] for r in rows], dtype=np.float64),
            variability=np.asarray([r[2] for r in rows], dtype=np.float64),
            correctness=np.asarray([r[3] for r in rows], dtype=np.float64),
            epochs_used=np.asarray([r[4] for r in rows], dtype=np.int64),
        )


def _check_series(series) -> np.ndarray:
    values = np.asarray(series, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("series must be a nonempty 1-D sequence")
    if np.any((values < 0.0) | (values > 1.0)) or not np.all(np.isfinite(values)):
        raise ValueError("series values must lie in [0, 1]")
    return values


def confidence(series: Sequence[float]) -> float:
    """Mean gold-label probability across the observed epochs."""
    return float(_check_series(series).mean())


def variability(series: Sequence[float]) -> float:
    """Population standard deviation of the gold-label probability.

    The denominator is the number of epochs (not epochs - 1).  A constant
    series returns exactly 0.0; the float mean of a constant sequence is not
    always the constant, so that case is short-circuited rather than computed.
    """
    values = _check_series(series)
    if values.max() == values.min():
        return 0.0
    deviations = values - values.mean()
    return float(np.sqrt(np.mean(deviations * deviations)))


def correctness(preds: Sequence[int], gold: int) -> float:
    """Fraction of epochs whose argmax prediction equals the gold label."""
    preds = np.asarray(preds)
    if preds.ndim != 1 or preds.size == 0:
        raise ValueError("preds must be a nonempty 1-D sequence")
    return float(np.count_nonzero(preds == gold) / preds.size)


def compute_all(log: RunLog, allow_ragged: bool = False) -> MetricsTable:
    """All three measures for every instance, sorted by guid.

    Equals the per-instance application of :func:`confidence`,
    :func:`variability` and :func:`correctness`.  Instances may be processed
    in any order or in parallel; identical output is guaranteed by the guid
    sort.
    """
    if log.epochs_observed < 1 or log.n_instances == 0:
        raise ValueError("log has no snapshot records to aggregate")
    if log.is_ragged and not allow_ragged:
        raise ValueError("ragged log: pass allow_ragged to compute over per-instance epoch sets")

    order = np.argsort(np.asarray(log.guids))
    p = log.p_gold[order]
    pred = log.pred[order]
    gold = log.gold[order]

    if log.observed is None:
        epochs_used = np.full(len(order), log.epochs_observed, dtype=np.int64)
        mu = p.mean(axis=1)
        dev = p - mu[:, None]
        var = np.mean(dev * dev, axis=1)
        constant = p.max(axis=1) == p.min(axis=1)
        sigma = np.where(constant, 0.0, np.sqrt(var))
        corr = (pred == gold[:, None]).mean(axis=1)
    else:
        observed = log.observed[order]
        epochs_used = observed.sum(axis=1).astype(np.int64)
        if np.any(epochs_used == 0):
            raise ValueError("an instance with zero observed epochs has no dynamics")
        p_filled = np.where(observed, p, 0.0)
        mu = p_filled.sum(axis=1) / epochs_used
        dev = np.where(observed, p - mu[:, None], 0.0)
        var = (dev * dev).sum(axis=1) / epochs_used
        p_max = np.where(observed, p, -np.inf).max(axis=1)
        p_min = np.where(observed, p, np.inf).min(axis=1)
        sigma = np.where(p_max == p_min, 0.0, np.sqrt(var))
        corr = np.where(observed, pred == gold[:, None], False).sum(axis=1) / epochs_used

    return MetricsTable(
        guids=[log.guids[i] for i in order],
        confidence=mu,
        variability=sigma,
        correctness=corr,
        epochs_used=epochs_used,
        meta=log.meta,
    )
