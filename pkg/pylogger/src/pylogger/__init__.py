"""Logging shim for external training loops.

Emits ``cartograph-dynlog v1`` files (line-delimited JSON, UTF-8, LF) that
the cartograph toolkit consumes, without depending on it or on anything
outside the standard library.  Drop it into any training loop -- a
transformer fine-tune, a scikit-learn loop, whatever -- and call
:func:`log_epoch` once per epoch with that epoch's gold-label probabilities
and argmax predictions for every training instance.

The shim does no numeric work beyond formatting: callers supply the
probabilities and the argmax predictions, so prediction semantics stay with
the caller's model.  Records are serialized exactly like the analysis
toolkit's own writer (compact JSON, shortest round-tripping float repr), so
files from either source are byte-compatible.

Typical use::

    handle = pylogger.begin_run("run.jsonl", run_id="ft-1",
                                dataset_name="exam-qa", num_classes=4,
                                planned_epochs=20)
    for epoch in range(20):
        ...train one epoch...
        probs, preds = frozen_pass(model, train_set)   # no gradient updates
        pylogger.log_epoch(handle, epoch, guids, golds, probs, preds)
    print(pylogger.finalize(handle))
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import IO, Sequence

__version__ = "0.1.0"

_FORMAT_KEY = "cartograph_dynlog"
_FORMAT_VERSION = 1


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class DynamicsLogger:
    """Single-writer handle for one run's dynamics log.

    The header is written exactly once by :meth:`begin`; epochs must then be
    logged in ascending order (consecutively, unless ``allow_gaps``) with the
    same instance count every epoch.  Concurrent ``log_epoch`` calls on one
    handle are a caller error and surface as epoch-ordering failures.
    """

    def __init__(
        self,
        sink: IO[bytes] | str,
        run_id: str,
        dataset_name: str,
        num_classes: int,
        planned_epochs: int,
        num_train_instances: int = 0,
        created_at: str | None = None,
        allow_gaps: bool = False,
    ):
        if not isinstance(run_id, str) or not run_id:
            raise ValueError("run_id must be a nonempty string")
        if int(num_classes) < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        if int(planned_epochs) < 1:
            raise ValueError(f"planned_epochs must be >= 1, got {planned_epochs}")
        if int(num_train_instances) < 0:
            raise ValueError("num_train_instances must be >= 0")
        self.run_id = run_id
        self.dataset_name = dataset_name
        self.num_classes = int(num_classes)
        self.planned_epochs = int(planned_epochs)
        self.num_train_instances = int(num_train_instances)
        self.created_at = created_at if created_at is not None else _utc_now()
        self.allow_gaps = allow_gaps
        self.epochs_emitted = 0
        self.instances_per_epoch = 0
        self._last_epoch = -1
        self._begun = False
        self._closed = False
        if isinstance(sink, str):
            self._sink: IO[bytes] = open(sink, "wb")
            self._owns_sink = True
        else:
            self._sink = sink
            self._owns_sink = False

    def begin(self) -> "DynamicsLogger":
        """Write the header line. Calling twice is an error."""
        if self._begun:
            raise RuntimeError("begin_run called twice on the same handle")
        header = {
            _FORMAT_KEY: _FORMAT_VERSION,
            "run_id": self.run_id,
            "dataset_name": self.dataset_name,
            "num_classes": self.num_classes,
            "planned_epochs": self.planned_epochs,
            "num_train_instances": self.num_train_instances,
            "created_at": self.created_at,
        }
        self._sink.write(json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode("utf-8") + b"\n")
        self._begun = True
        return self

    def log_epoch(
        self,
        epoch: int,
        guids: Sequence[str],
        gold_labels: Sequence[int],
        gold_probs: Sequence[float],
        preds: Sequence[int],
    ) -> None:
        """Append one record line per instance for a completed epoch."""
        if not self._begun:
            raise RuntimeError("log_epoch before begin_run")
        if self._closed:
            raise RuntimeError("log_epoch after finalize")
        epoch = int(epoch)
        if epoch <= self._last_epoch:
            raise ValueError(f"epochs must ascend: got {epoch} after {self._last_epoch}")
        if not self.allow_gaps and epoch != self._last_epoch + 1:
            raise ValueError(
                f"epoch {epoch} skips {self._last_epoch + 1} (pass allow_gaps to permit holes)"
            )
        if not 0 <= epoch < self.planned_epochs:
            raise ValueError(f"epoch {epoch} outside [0, {self.planned_epochs})")
        n = len(guids)
        if not (len(gold_labels) == len(gold_probs) == len(preds) == n):
            raise ValueError("guids, gold_labels, gold_probs and preds must have equal length")
        if self.epochs_emitted > 0 and n != self.instances_per_epoch:
            raise ValueError(
                f"epoch {epoch} has {n} instances, earlier epochs had {self.instances_per_epoch}"
            )

        dumps = json.dumps
        lines = []
        for guid, gold, prob, pred in zip(guids, gold_labels, gold_probs, preds):
            if not isinstance(guid, str) or not guid:
                raise ValueError("guids must be nonempty strings")
            gold = int(gold)
            pred = int(pred)
            prob = float(prob)
            if not 0 <= gold < self.num_classes:
                raise ValueError(f"gold {gold} outside [0, {self.num_classes}) for {guid!r}")
            if not 0 <= pred < self.num_classes:
                raise ValueError(f"pred {pred} outside [0, {self.num_classes}) for {guid!r}")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"gold_prob {prob!r} outside [0, 1] for {guid!r}")
            lines.append(
                f'{{"e":{epoch},"guid":{dumps(guid, ensure_ascii=False)},"gold":{gold},'
                f'"p_gold":{prob!r},"pred":{pred}}}'
            )
        if lines:
            self._sink.write(("\n".join(lines) + "\n").encode("utf-8"))
        if self.epochs_emitted == 0:
            self.instances_per_epoch = n
        self.epochs_emitted += 1
        self._last_epoch = epoch

    def finalize(self) -> dict:
        """Flush and close; returns {"epochs": ..., "instances": ...}."""
        if self._closed:
            raise RuntimeError("finalize called twice")
        if not self._begun:
            raise RuntimeError("finalize before begin_run")
        self._sink.flush()
        if self._owns_sink:
            self._sink.close()
        self._closed = True
        return {"epochs": self.epochs_emitted, "instances": self.instances_per_epoch}

    def __enter__(self) -> "DynamicsLogger":
        if not self._begun:
            self.begin()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if not self._closed:
            self.finalize()


def begin_run(
    path: str | IO[bytes],
    run_id: str,
    dataset_name: str,
    num_classes: int,
    planned_epochs: int,
    num_train_instances: int = 0,
    created_at: str | None = None,
    allow_gaps: bool = False,
) -> DynamicsLogger:
    """Open ``path`` and write the run header; returns the logger handle."""
    handle = DynamicsLogger(
        path,
        run_id=run_id,
        dataset_name=dataset_name,
        num_classes=num_classes,
        planned_epochs=planned_epochs,
        num_train_instances=num_train_instances,
        created_at=created_at,
        allow_gaps=allow_gaps,
    )
    return handle.begin()


def log_epoch(handle: DynamicsLogger, epoch, guids, gold_labels, gold_probs, preds) -> None:
    handle.log_epoch(epoch, guids, gold_labels, gold_probs, preds)


def finalize(handle: DynamicsLogger) -> dict:
    return handle.finalize()
