import io

import numpy as np
import pytest

from cartograph import RunLog, RunMeta, parse_log
from cartograph._rng import generator

FIXED_TIME = "2026-01-01T00:00:00Z"


def make_meta(num_classes=4, planned_epochs=20, run_id="test-run", n=0):
    return RunMeta(
        run_id=run_id,
        dataset_name="unit",
        num_classes=num_classes,
        planned_epochs=planned_epochs,
        num_train_instances=n,
        created_at=FIXED_TIME,
    )


def random_runlog(seed: int, n: int, epochs: int, num_classes: int = 4) -> RunLog:
    """A dense random RunLog built directly in memory."""
    rng = generator(seed)
    meta = make_meta(num_classes=num_classes, planned_epochs=epochs, run_id=f"rand-{seed}", n=n)
    guids = [f"g{i:06d}" for i in range(n)]
    return RunLog.from_arrays(
        meta,
        guids,
        rng.integers(0, num_classes, size=n),
        rng.random((n, epochs)),
        rng.integers(0, num_classes, size=(n, epochs)),
    )


def log_bytes(log: RunLog) -> bytes:
    from cartograph import write_log

    sink = io.BytesIO()
    write_log(log, sink)
    return sink.getvalue()


@pytest.fixture
def tiny_log() -> RunLog:
    meta = make_meta(num_classes=4, planned_epochs=3)
    guids = ["q1", "q2"]
    gold = [2, 0]
    p = np.array([[0.25, 0.5, 0.75], [0.1, 0.1, 0.1]])
    pred = np.array([[2, 2, 2], [1, 0, 0]])
    return RunLog.from_arrays(meta, guids, gold, p, pred)


def roundtrip(log: RunLog, allow_ragged: bool = False) -> RunLog:
    return parse_log(log_bytes(log), allow_ragged=allow_ragged)
