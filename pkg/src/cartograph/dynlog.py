"""Reader, writer and validator for the ``cartograph-dynlog v1`` format.

A dynamics log decouples training loops from analysis: any trainer that can
append JSON lines produces one.  The format is line-delimited JSON (UTF-8,
LF line endings, no BOM):

* line 1, the header::

    {"cartograph_dynlog":1,"run_id":...,"dataset_name":...,"num_classes":C,
     "planned_epochs":E,"num_train_instances":N,"created_at":...}

* every following line, one snapshot record::

    {"e":int,"guid":str,"gold":int,"p_gold":float,"pred":int}

Epochs are 0-based: a record with ``e == 2`` holds the gold-label
probability and argmax prediction measured after the third epoch's gradient
updates, on a frozen inference pass over the training split.

``p_gold`` is written as Python's shortest round-tripping decimal, so
parsing recovers the exact 64-bit value that was logged.  Unknown keys are
ignored on read and never written.  ``gold`` is repeated on every record so
each line is self-describing; constancy across epochs is checked by
:func:`validate_file`, not at parse time (the first value wins there).
"""

from __future__ import annotations

import io
import json
import sys
from array import array
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from ._validation import check_int, check_probability
from .errors import LogFormatError

FORMAT_KEY = "cartograph_dynlog"
FORMAT_VERSION = 1

_RESERVED_META_KEYS = (
    FORMAT_KEY,
    "run_id",
    "dataset_name",
    "num_classes",
    "planned_epochs",
    "num_train_instances",
    "created_at",
)


def utc_now_iso() -> str:
    """Current UTC time as an ISO-8601 string suitable for ``created_at``."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class RunMeta:
    """Header fields describing one training run."""

    run_id: str
    dataset_name: str
    num_classes: int
    planned_epochs: int
    num_train_instances: int = 0  # 0 = unknown
    created_at: str = ""

    def __post_init__(self):
        if not isinstance(self.run_id, str) or not self.run_id:
            raise ValueError("run_id must be a nonempty string")
        object.__setattr__(self, "num_classes", check_int(self.num_classes, "num_classes", minimum=2))
        object.__setattr__(self, "planned_epochs", check_int(self.planned_epochs, "planned_epochs", minimum=1))
        object.__setattr__(
            self, "num_train_instances", check_int(self.num_train_instances, "num_train_instances", minimum=0)
        )

    def header_line(self) -> str:
        payload = {
            FORMAT_KEY: FORMAT_VERSION,
            "run_id": self.run_id,
            "dataset_name": self.dataset_name,
            "num_classes": self.num_classes,
            "planned_epochs": self.planned_epochs,
            "num_train_instances": self.num_train_instances,
            "created_at": self.created_at,
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class SnapshotRecord:
    """Gold-label probability and argmax prediction for one (epoch, instance)."""

    epoch: int
    guid: str
    gold: int
    p_gold: float
    pred: int

    def __post_init__(self):
        if not isinstance(self.guid, str) or not self.guid:
            raise ValueError("guid must be a nonempty string")
        object.__setattr__(self, "epoch", check_int(self.epoch, "epoch", minimum=0))
        object.__setattr__(self, "gold", check_int(self.gold, "gold", minimum=0))
        object.__setattr__(self, "pred", check_int(self.pred, "pred", minimum=0))
        object.__setattr__(self, "p_gold", check_probability(self.p_gold, "p_gold"))

    def line(self) -> str:
        payload = {
            "e": self.epoch,
            "guid": self.guid,
            "gold": self.gold,
            "p_gold": self.p_gold,
            "pred": self.pred,
        }
        return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


@dataclass
class RunLog:
    """A fully parsed dynamics log on a dense (instance x epoch) grid.

    Instances keep their first-seen file order.  ``p_gold`` and ``pred`` have
    shape ``(n_instances, epochs_observed)``.  When parsed with
    ``allow_ragged=True`` and the grid had holes, ``observed`` marks which
    cells were present and unobserved ``p_gold`` cells are NaN.  Instances
    are immutable by convention after construction and safe to share across
    threads.
    """

    meta: RunMeta
    guids: list[str]
    gold: np.ndarray
    p_gold: np.ndarray
    pred: np.ndarray
    epochs_observed: int
    observed: np.ndarray | None = None

    @property
    def n_instances(self) -> int:
        return len(self.guids)

    @property
    def is_ragged(self) -> bool:
        return self.observed is not None

    def records(self) -> Iterator[SnapshotRecord]:
        """All records in canonical (epoch-major, stored instance order) order."""
        for e in range(self.epochs_observed):
            for i in range(self.n_instances):
                if self.observed is not None and not self.observed[i, e]:
                    continue
                yield SnapshotRecord(
                    epoch=e,
                    guid=self.guids[i],
                    gold=int(self.gold[i]),
                    p_gold=float(self.p_gold[i, e]),
                    pred=int(self.pred[i, e]),
                )

    def equals(self, other: "RunLog") -> bool:
        """Field-for-field equality (exact, including p_gold bit patterns)."""
        if self.meta != other.meta:
            return False
        if self.guids != other.guids or self.epochs_observed != other.epochs_observed:
            return False
        if not np.array_equal(self.gold, other.gold):
            return False
        if (self.observed is None) != (other.observed is None):
            return False
        if self.observed is not None:
            if not np.array_equal(self.observed, other.observed):
                return False
            sel = self.observed
            return np.array_equal(self.p_gold[sel], other.p_gold[sel]) and np.array_equal(
                self.pred[sel], other.pred[sel]
            )
        return np.array_equal(self.p_gold, other.p_gold) and np.array_equal(self.pred, other.pred)

    @classmethod
    def from_arrays(
        cls,
        meta: RunMeta,
        guids: list[str],
        gold,
        p_gold,
        pred,
        observed=None,
    ) -> "RunLog":
        p_gold = np.asarray(p_gold, dtype=np.float64)
        if p_gold.ndim != 2:
            raise ValueError("p_gold must be 2-D (instances x epochs)")
        return cls(
            meta=meta,
            guids=list(guids),
            gold=np.asarray(gold, dtype=np.int64),
            p_gold=p_gold,
            pred=np.asarray(pred, dtype=np.int64),
            epochs_observed=p_gold.shape[1],
            observed=None if observed is None else np.asarray(observed, dtype=bool),
        )


class LogWriter:
    """Single-writer, append-only emitter for one run's dynamics log.

    Holds the run header so every appended record can be checked against the
    declared class count and epoch budget before it reaches the sink.
    """

    def __init__(self, sink: IO[bytes], meta: RunMeta):
        self._sink = sink
        self.meta = meta
        self._header_written = False

    def write_header(self) -> None:
        if self._header_written:
            raise LogFormatError("header already written")
        self._sink.write(self.meta.header_line().encode("utf-8") + b"\n")
        self._header_written = True

    def append_snapshot(self, record: SnapshotRecord) -> None:
        if not self._header_written:
            raise LogFormatError("header must be written before snapshot records")
        if record.gold >= self.meta.num_classes:
            raise ValueError(f"gold={record.gold} out of range for num_classes={self.meta.num_classes}")
        if record.pred >= self.meta.num_classes:
            raise ValueError(f"pred={record.pred} out of range for num_classes={self.meta.num_classes}")
        if record.epoch >= self.meta.planned_epochs:
            raise ValueError(f"epoch={record.epoch} out of range for planned_epochs={self.meta.planned_epochs}")
        self._sink.write(record.line().encode("utf-8") + b"\n")

    def append_epoch(self, epoch: int, guids, gold, p_gold, preds) -> None:
        """Append one epoch's records for many instances in a single call.

        Byte-for-byte identical to looping :meth:`append_snapshot`, but
        validates with vectorized checks and formats lines directly, which
        matters at hundreds of thousands of records per epoch.
        """
        if not self._header_written:
            raise LogFormatError("header must be written before snapshot records")
        epoch = check_int(epoch, "epoch", minimum=0, maximum=self.meta.planned_epochs - 1)
        gold = np.asarray(gold)
        preds = np.asarray(preds)
        p = np.asarray(p_gold, dtype=np.float64)
        n = len(guids)
        if not (gold.shape == preds.shape == p.shape == (n,)):
            raise ValueError("guids, gold, p_gold and preds must have equal length")
        if n == 0:
            return
        if gold.min() < 0 or gold.max() >= self.meta.num_classes:
            raise ValueError(f"gold out of range for num_classes={self.meta.num_classes}")
        if preds.min() < 0 or preds.max() >= self.meta.num_classes:
            raise ValueError(f"pred out of range for num_classes={self.meta.num_classes}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("p_gold values must lie in [0, 1]")
        dumps = json.dumps
        lines = [
            f'{{"e":{epoch},"guid":{dumps(guid, ensure_ascii=False)},"gold":{g},"p_gold":{pv!r},"pred":{pr}}}'
            for guid, g, pv, pr in zip(guids, gold.tolist(), p.tolist(), preds.tolist())
        ]
        self._sink.write(("\n".join(lines) + "\n").encode("utf-8"))

    def flush(self) -> None:
        self._sink.flush()


def write_header(meta: RunMeta, sink: IO[bytes]) -> None:
    """Emit the header line. Invalid metadata is rejected by RunMeta itself."""
    sink.write(meta.header_line().encode("utf-8") + b"\n")


def append_snapshot(record: SnapshotRecord, sink: IO[bytes], meta: RunMeta | None = None) -> None:
    """Append one record line.

    With ``meta`` given, class indices and the epoch are checked against the
    header; without it only the meta-independent bounds are enforced.
    """
    if meta is not None:
        if record.gold >= meta.num_classes or record.pred >= meta.num_classes:
            raise ValueError("class index out of range for header num_classes")
        if record.epoch >= meta.planned_epochs:
            raise ValueError("epoch out of range for header planned_epochs")
    sink.write(record.line().encode("utf-8") + b"\n")


def write_log(log: RunLog, sink: IO[bytes] | str | Path) -> None:
    """Serialize a RunLog (header plus all records in canonical order)."""
    with _as_binary_sink(sink) as out:
        writer = LogWriter(out, log.meta)
        writer.write_header()
        guids = np.asarray(log.guids, dtype=object)
        for e in range(log.epochs_observed):
            if log.observed is not None:
                rows = np.flatnonzero(log.observed[:, e])
            else:
                rows = np.arange(log.n_instances)
            writer.append_epoch(e, guids[rows].tolist(), log.gold[rows], log.p_gold[rows, e], log.pred[rows, e])
        writer.flush()


@contextmanager
def open_writer(path: str | Path, meta: RunMeta):
    """Open ``path`` for writing and yield a LogWriter with the header emitted."""
    with open(path, "wb") as sink:
        writer = LogWriter(sink, meta)
        writer.write_header()
        yield writer
        writer.flush()


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@contextmanager
def _as_binary_source(source):
    if isinstance(source, (str, Path)):
        with open(source, "rb") as handle:
            yield handle
    elif isinstance(source, bytes):
        yield io.BytesIO(source)
    else:
        yield source


@contextmanager
def _as_binary_sink(sink):
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as handle:
            yield handle
    else:
        yield sink


def _parse_header(raw: bytes, lineno: int) -> RunMeta:
    try:
        obj = json.loads(raw)
    except ValueError as exc:
        raise LogFormatError(f"malformed header: {exc}", line=lineno) from None
    if not isinstance(obj, dict) or FORMAT_KEY not in obj:
        raise LogFormatError("missing header (first line must declare cartograph_dynlog)", line=lineno)
    if obj[FORMAT_KEY] != FORMAT_VERSION:
        raise LogFormatError(f"unsupported format version {obj[FORMAT_KEY]!r}", line=lineno)
    try:
        return RunMeta(
            run_id=obj["run_id"],
            dataset_name=obj["dataset_name"],
            num_classes=obj["num_classes"],
            planned_epochs=obj["planned_epochs"],
            num_train_instances=obj.get("num_train_instances", 0),
            created_at=obj.get("created_at", ""),
        )
    except KeyError as exc:
        raise LogFormatError(f"header missing required key {exc.args[0]!r}", line=lineno) from None
    except (TypeError, ValueError) as exc:
        raise LogFormatError(f"invalid header: {exc}", line=lineno) from None


def _parse_record_fields(raw: bytes, lineno: int):
    try:
        obj = json.loads(raw)
    except ValueError as exc:
        raise LogFormatError(f"malformed record: {exc}", line=lineno) from None
    if not isinstance(obj, dict):
        raise LogFormatError("record line is not a JSON object", line=lineno)
    if FORMAT_KEY in obj:
        raise LogFormatError("duplicate header", line=lineno)
    try:
        e = obj["e"]
        guid = obj["guid"]
        gold = obj["gold"]
        p = obj["p_gold"]
        pred = obj["pred"]
    except KeyError as exc:
        raise LogFormatError(f"record missing required key {exc.args[0]!r}", line=lineno) from None
    if type(e) is not int or type(gold) is not int or type(pred) is not int:
        raise LogFormatError("e, gold and pred must be integers", line=lineno)
    if not isinstance(guid, str) or not guid:
        raise LogFormatError("guid must be a nonempty string", line=lineno)
    if type(p) is int:
        p = float(p)
    elif type(p) is not float:
        raise LogFormatError("p_gold must be a number", line=lineno)
    return e, guid, gold, p, pred


def parse_log(source: IO[bytes] | bytes | str | Path, allow_ragged: bool = False) -> RunLog:
    """Parse a dynamics log into a dense RunLog.

    Raises :class:`LogFormatError` (with a line number) on malformed or
    duplicated lines, out-of-range values, and ragged grids unless
    ``allow_ragged`` is set, in which case each instance is restricted to
    the epochs it was actually observed in.
    """
    with _as_binary_source(source) as stream:
        lines = iter(enumerate(stream, start=1))
        header_raw = None
        for lineno, raw in lines:
            if raw.strip():
                header_raw = (lineno, raw)
                break
        if header_raw is None:
            raise LogFormatError("missing header (empty stream)", line=1)
        meta = _parse_header(header_raw[1], header_raw[0])

        num_classes = meta.num_classes
        planned = meta.planned_epochs
        guid_index: dict[str, int] = {}
        guids: list[str] = []
        gold_list: list[int] = []
        rec_e = array("q")
        rec_i = array("q")
        rec_p = array("d")
        rec_pred = array("q")
        intern = sys.intern

        for lineno, raw in lines:
            if not raw.strip():
                continue
            e, guid, gold, p, pred = _parse_record_fields(raw, lineno)
            if not 0 <= e < planned:
                raise LogFormatError(f"epoch {e} out of range [0, {planned})", line=lineno)
            if not 0 <= gold < num_classes:
                raise LogFormatError(f"gold {gold} out of range [0, {num_classes})", line=lineno)
            if not 0 <= pred < num_classes:
                raise LogFormatError(f"pred {pred} out of range [0, {num_classes})", line=lineno)
            if not 0.0 <= p <= 1.0:
                raise LogFormatError(f"p_gold {p!r} outside [0, 1]", line=lineno)
            idx = guid_index.get(guid)
            if idx is None:
                idx = len(guids)
                guid_index[intern(guid)] = idx
                guids.append(intern(guid))
                gold_list.append(gold)
            rec_e.append(e)
            rec_i.append(idx)
            rec_p.append(p)
            rec_pred.append(pred)

    n = len(guids)
    if not rec_e:
        return RunLog(
            meta=meta,
            guids=guids,
            gold=np.asarray(gold_list, dtype=np.int64),
            p_gold=np.zeros((n, 0)),
            pred=np.zeros((n, 0), dtype=np.int64),
            epochs_observed=0,
        )

    e_arr = np.frombuffer(rec_e, dtype=np.int64)
    i_arr = np.frombuffer(rec_i, dtype=np.int64)
    p_arr = np.frombuffer(rec_p, dtype=np.float64)
    pred_arr = np.frombuffer(rec_pred, dtype=np.int64)
    epochs_observed = int(e_arr.max()) + 1

    # a dense grid has exactly n * epochs_observed records; refuse to allocate
    # a grid wildly larger than the data (corrupt epoch indices, extreme holes)
    cells = n * epochs_observed
    if cells > 4 * len(rec_e) + 4096:
        raise LogFormatError(
            f"grid of {n} instances x {epochs_observed} epochs but only "
            f"{len(rec_e)} records: log is too sparse to be a snapshot grid"
        )

    counts = np.zeros((n, epochs_observed), dtype=np.int32)
    np.add.at(counts, (i_arr, e_arr), 1)
    if (counts > 1).any():
        i, e = np.argwhere(counts > 1)[0]
        raise LogFormatError(f"duplicate record for guid {guids[int(i)]!r} at epoch {int(e)}")

    p_mat = np.full((n, epochs_observed), np.nan)
    pred_mat = np.zeros((n, epochs_observed), dtype=np.int64)
    p_mat[i_arr, e_arr] = p_arr
    pred_mat[i_arr, e_arr] = pred_arr

    observed = counts.astype(bool)
    if observed.all():
        observed_out = None
    elif allow_ragged:
        observed_out = observed
    else:
        i, e = np.argwhere(~observed)[0]
        raise LogFormatError(
            f"ragged grid: instance {guids[int(i)]!r} has no record for epoch {int(e)} "
            "(pass allow_ragged to accept per-instance epoch sets)"
        )

    return RunLog(
        meta=meta,
        guids=guids,
        gold=np.asarray(gold_list, dtype=np.int64),
        p_gold=p_mat,
        pred=pred_mat,
        epochs_observed=epochs_observed,
        observed=observed_out,
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class Violation:
    kind: str  # "format" | "bounds" | "density" | "gold_drift" | "duplicate" | "count"
    count: int
    first_guid: str | None
    detail: str

    def __str__(self) -> str:
        where = f" (first: {self.first_guid!r})" if self.first_guid else ""
        return f"{self.kind}: {self.detail} [{self.count} occurrence(s)]{where}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "valid: no violations"
        return "\n".join(str(v) for v in self.violations)


class _ViolationCollector:
    def __init__(self):
        self._by_kind: dict[str, Violation] = {}

    def add(self, kind: str, detail: str, guid: str | None = None) -> None:
        hit = self._by_kind.get(kind)
        if hit is None:
            self._by_kind[kind] = Violation(kind=kind, count=1, first_guid=guid, detail=detail)
        else:
            hit.count += 1

    def report(self) -> ValidationReport:
        return ValidationReport(violations=list(self._by_kind.values()))


def validate(log: RunLog) -> ValidationReport:
    """Check an in-memory RunLog; reports violations, never raises.

    Covers bounds, grid density and header/instance count consistency.
    Duplicate records and gold drift cannot survive parsing (the grid is
    positional and gold is stored once per instance), so those checks live
    in :func:`validate_file`, which sees the raw lines.
    """
    out = _ViolationCollector()
    n, e_obs = log.p_gold.shape

    if log.observed is not None:
        missing = ~log.observed
        if missing.any():
            i = int(np.argwhere(missing.any(axis=1))[0][0])
            out.add(
                "density",
                f"{int(missing.sum())} missing (epoch, instance) cells on a {n}x{e_obs} grid",
                log.guids[i],
            )

    sel = log.observed if log.observed is not None else slice(None)
    p = log.p_gold[sel]
    bad_p = ~np.isfinite(p) | (p < 0.0) | (p > 1.0)
    if bad_p.any():
        if log.observed is None:
            i = int(np.argwhere(bad_p.any(axis=1))[0][0])
            guid = log.guids[i]
        else:
            guid = None
        out.add("bounds", f"{int(bad_p.sum())} p_gold values outside [0, 1]", guid)

    for name, values in (("gold", log.gold), ("pred", log.pred[sel])):
        bad = (values < 0) | (values >= log.meta.num_classes)
        if bad.any():
            guid = None
            if values.ndim == 1:
                guid = log.guids[int(np.argwhere(bad)[0][0])]
            out.add("bounds", f"{int(bad.sum())} {name} values outside [0, {log.meta.num_classes})", guid)

    if e_obs > log.meta.planned_epochs:
        out.add("bounds", f"observed {e_obs} epochs exceeds planned_epochs={log.meta.planned_epochs}", None)

    declared = log.meta.num_train_instances
    if declared > 0 and declared != n:
        out.add("count", f"header declares {declared} instances, log contains {n}", None)

    return out.report()


def validate_file(source: IO[bytes] | bytes | str | Path, grid: bool = True) -> ValidationReport:
    """Stream-validate a log file; reports violations, never raises on content.

    Memory is O(instances) with ``grid=True`` (density, duplicates and gold
    drift need per-instance state) and O(1) with ``grid=False``, which keeps
    only the header and per-line format/bounds checks.
    """
    out = _ViolationCollector()
    meta: RunMeta | None = None
    # guid -> [gold, epoch bitmask]; bitmask ints stay small for E <= ~10^3
    state: dict[str, list] = {}
    max_epoch = -1
    n_records = 0

    with _as_binary_source(source) as stream:
        lines = iter(enumerate(stream, start=1))
        header_raw = None
        for lineno, raw in lines:
            if raw.strip():
                header_raw = (lineno, raw)
                break
        if header_raw is None:
            out.add("format", "missing header (empty stream)")
            return out.report()
        try:
            meta = _parse_header(header_raw[1], header_raw[0])
        except LogFormatError as exc:
            out.add("format", str(exc))
        # epochs flagged as out of range are excluded from grid state so
        # corrupt indices cannot inflate the per-guid bitmasks; density
        # tracking also refuses absurd epoch counts outright
        epoch_cap = min(meta.planned_epochs if meta is not None else 1 << 16, 1 << 16)

        for lineno, raw in lines:
            if not raw.strip():
                continue
            try:
                e, guid, gold, p, pred = _parse_record_fields(raw, lineno)
            except LogFormatError as exc:
                out.add("format", str(exc))
                continue
            n_records += 1
            if e < 0 or (meta is not None and e >= meta.planned_epochs):
                out.add("bounds", f"epoch out of range (line {lineno})", guid)
            elif e >= epoch_cap:
                out.add("bounds", f"epoch {e} exceeds the grid-tracking cap of {epoch_cap} (line {lineno})", guid)
            if gold < 0 or (meta is not None and gold >= meta.num_classes):
                out.add("bounds", f"gold out of range (line {lineno})", guid)
            if pred < 0 or (meta is not None and pred >= meta.num_classes):
                out.add("bounds", f"pred out of range (line {lineno})", guid)
            if not 0.0 <= p <= 1.0:
                out.add("bounds", f"p_gold outside [0, 1] (line {lineno})", guid)
            if max_epoch < e < epoch_cap:
                max_epoch = e
            if grid and 0 <= e < epoch_cap:
                entry = state.get(guid)
                if entry is None:
                    state[guid] = [gold, 1 << e]
                else:
                    if entry[0] != gold:
                        out.add("gold_drift", "gold label differs across epochs", guid)
                    if entry[1] >> e & 1:
                        out.add("duplicate", f"duplicate (epoch={e}, guid) record", guid)
                    entry[1] |= 1 << e

    if grid and state:
        e_obs = max_epoch + 1
        full = (1 << e_obs) - 1
        for guid, (gold, mask) in state.items():
            if mask != full:
                missing = e_obs - int(mask).bit_count()
                out.add("density", f"instance missing from {missing} of {e_obs} observed epochs", guid)
    if meta is not None and grid and meta.num_train_instances > 0 and len(state) != meta.num_train_instances:
        if n_records > 0:
            out.add("count", f"header declares {meta.num_train_instances} instances, log contains {len(state)}")

    return out.report()
