"""Desk-scale multiclass softmax classifier with per-epoch dynamics capture.

The model is multinomial logistic regression over hashed bag-of-words (or
caller-supplied sparse features), trained by mini-batch SGD on cross-entropy
with L2 regularization.  It is deliberately convex: gradients can be checked
against finite differences and full-batch loss curves are provably
monotone, which makes the whole dynamics pipeline verifiable on a laptop.

After each epoch's updates one frozen inference pass runs over the full
training split -- no gradient updates -- and appends one snapshot record per
training instance to the dynamics log.  Training is single-threaded and all
randomness flows through seeded PCG64 streams, so identical inputs give
bit-identical models, curves and logs.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
import zipfile
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin

from ._rng import generator
from ._validation import check_int, check_real
from .dynlog import LogWriter, RunMeta, utc_now_iso
from .errors import DatasetError, TrainingDivergedError

DEFAULT_FEATURE_DIM = 2**18
SPLITS = ("train", "validation", "test", "ood")

_TOKEN_RE = re.compile(r"\w+")
_LOG_FLOOR = 1e-300  # keeps -log finite; hit only by a numerically dead model


def featurize(text: str, feature_dim: int = DEFAULT_FEATURE_DIM) -> list[tuple[int, float]]:
    """Hash a text into a unit-L2 sparse bag-of-words vector.

    Lowercases, tokenizes on word characters (everything else is a
    separator), hashes each token with BLAKE2b into ``[0, feature_dim)`` and
    L2-normalizes the counts.  Deterministic across runs and platforms.
    Empty text gives the zero vector.
    """
    check_int(feature_dim, "feature_dim", minimum=2)
    counts: dict[int, int] = {}
    for token in _TOKEN_RE.findall(text.lower()):
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        bucket = int.from_bytes(digest, "little") % feature_dim
        counts[bucket] = counts.get(bucket, 0) + 1
    if not counts:
        return []
    norm = np.sqrt(sum(c * c for c in counts.values()))
    return [(index, counts[index] / norm) for index in sorted(counts)]


@dataclass(frozen=True)
class Instance:
    guid: str
    split: str
    gold: int
    text: str | None = None
    features: tuple[tuple[int, float], ...] | None = None

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DatasetError(f"unknown split {self.split!r} for instance {self.guid!r}")
        if (self.text is None) == (self.features is None):
            raise DatasetError(f"instance {self.guid!r} must carry either text or features")


@dataclass
class Dataset:
    """Featurized or raw-text multiclass instances, partitioned into splits."""

    instances: list[Instance]
    num_classes: int
    feature_dim: int = 0  # 0 = text dataset, dimension chosen at train time

    def __post_init__(self):
        seen: set[str] = set()
        for inst in self.instances:
            if inst.guid in seen:
                raise DatasetError(f"duplicate guid {inst.guid!r}")
            seen.add(inst.guid)
            if not 0 <= inst.gold < self.num_classes:
                raise DatasetError(f"instance {inst.guid!r} has gold {inst.gold} outside [0, {self.num_classes})")

    def split(self, name: str) -> list[Instance]:
        if name not in SPLITS:
            raise DatasetError(f"unknown split {name!r}")
        return [inst for inst in self.instances if inst.split == name]


def load_dataset(
    source: IO[bytes] | str | Path,
    num_classes: int | None = None,
    feature_dim: int | None = None,
) -> Dataset:
    """Read a JSONL dataset: one object per line with guid/split/gold plus
    either ``text`` or ``features`` (a list of [index, value] pairs).

    ``num_classes`` defaults to ``max(gold) + 1``; ``feature_dim`` defaults to
    ``max(index) + 1`` for feature datasets and 0 (decided later) for text.
    """
    if isinstance(source, (str, Path)):
        with open(source, "rb") as handle:
            return load_dataset(handle, num_classes=num_classes, feature_dim=feature_dim)

    instances: list[Instance] = []
    max_gold = -1
    max_index = -1
    saw_text = False
    for lineno, raw in enumerate(source, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: malformed JSON: {exc}") from None
        try:
            guid, split, gold = obj["guid"], obj["split"], obj["gold"]
        except KeyError as exc:
            raise DatasetError(f"line {lineno}: missing key {exc.args[0]!r}") from None
        if type(gold) is not int or gold < 0:
            raise DatasetError(f"line {lineno}: gold must be a non-negative integer")
        text = obj.get("text")
        pairs = obj.get("features")
        if pairs is not None:
            try:
                features = tuple((int(i), float(v)) for i, v in pairs)
            except (TypeError, ValueError):
                raise DatasetError(f"line {lineno}: features must be [index, value] pairs") from None
            for index, _ in features:
                if index < 0:
                    raise DatasetError(f"line {lineno}: negative feature index")
                max_index = max(max_index, index)
            instance = Instance(guid=guid, split=split, gold=gold, features=features)
        elif text is not None:
            if not isinstance(text, str):
                raise DatasetError(f"line {lineno}: text must be a string")
            saw_text = True
            instance = Instance(guid=guid, split=split, gold=gold, text=text)
        else:
            raise DatasetError(f"line {lineno}: need either text or features")
        max_gold = max(max_gold, gold)
        instances.append(instance)

    if not instances:
        raise DatasetError("dataset is empty")
    if num_classes is None:
        num_classes = max(max_gold + 1, 2)
    if feature_dim is None:
        feature_dim = 0 if saw_text else max_index + 1
    return Dataset(instances=instances, num_classes=num_classes, feature_dim=feature_dim)


def write_dataset(dataset: Dataset, sink: IO[bytes] | str | Path) -> None:
    if isinstance(sink, (str, Path)):
        with open(sink, "wb") as handle:
            write_dataset(dataset, handle)
        return
    for inst in dataset.instances:
        obj: dict = {"guid": inst.guid, "split": inst.split, "gold": inst.gold}
        if inst.text is not None:
            obj["text"] = inst.text
        else:
            obj["features"] = [[i, v] for i, v in inst.features]
        sink.write(json.dumps(obj, separators=(",", ":"), ensure_ascii=False).encode("utf-8") + b"\n")


def instances_to_matrix(instances: Sequence[Instance], feature_dim: int) -> sp.csr_matrix:
    """Stack instances into a CSR matrix; text instances are hashed first."""
    check_int(feature_dim, "feature_dim", minimum=2)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for r, inst in enumerate(instances):
        pairs = inst.features if inst.features is not None else featurize(inst.text, feature_dim)
        for index, value in pairs:
            if index >= feature_dim:
                raise DatasetError(
                    f"instance {inst.guid!r} has feature index {index} >= feature_dim={feature_dim}"
                )
            rows.append(r)
            cols.append(index)
            vals.append(value)
    matrix = sp.coo_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)),
        shape=(len(instances), feature_dim),
    )
    return matrix.tocsr()


def gold_labels(instances: Sequence[Instance]) -> np.ndarray:
    return np.asarray([inst.gold for inst in instances], dtype=np.int64)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; defaults follow the 20-epoch / batch-96 / 10-patience recipe."""

    epochs: int = 20
    batch_size: int = 96
    learning_rate: float = 0.1
    l2: float = 1e-4
    patience: int = 10
    improvement_epsilon: float = 0.0
    seed: int = 0
    feature_dim: int = DEFAULT_FEATURE_DIM

    def __post_init__(self):
        check_int(self.epochs, "epochs", minimum=1)
        check_int(self.batch_size, "batch_size", minimum=1)
        check_real(self.learning_rate, "learning_rate", 0.0, exclusive_min=True)
        check_real(self.l2, "l2", 0.0)
        check_int(self.patience, "patience", minimum=1)
        check_real(self.improvement_epsilon, "improvement_epsilon", 0.0)
        check_int(self.seed, "seed")
        check_int(self.feature_dim, "feature_dim", minimum=2)


@dataclass
class ModelState:
    """Softmax classifier parameters as they stood after a given epoch."""

    weights: np.ndarray  # (num_classes, feature_dim)
    bias: np.ndarray  # (num_classes,)
    epoch: int

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class CurveLog:
    """Per-epoch training curves (one row per completed epoch)."""

    train_accuracy: list[float] = field(default_factory=list)
    validation_accuracy: list[float] = field(default_factory=list)
    mean_train_loss: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_accuracy)

    def to_csv(self, sink: IO[str] | str | Path) -> None:
        if isinstance(sink, (str, Path)):
            with open(sink, "w", encoding="utf-8", newline="\n") as handle:
                self.to_csv(handle)
            return
        sink.write("epoch,train_acc,val_acc,mean_loss\n")
        for e in range(len(self)):
            sink.write(
                f"{e},{self.train_accuracy[e]!r},{self.validation_accuracy[e]!r},{self.mean_train_loss[e]!r}\n"
            )

    @classmethod
    def from_csv(cls, source: IO[str] | str | Path) -> "CurveLog":
        if isinstance(source, (str, Path)):
            with open(source, "r", encoding="utf-8") as handle:
                return cls.from_csv(handle)
        header = source.readline().strip()
        if header != "epoch,train_acc,val_acc,mean_loss":
            raise DatasetError(f"unexpected curve CSV header: {header!r}")
        curve = cls()
        for line in source:
            if not line.strip():
                continue
            _, train_acc, val_acc, loss = line.strip().split(",")
            curve.train_accuracy.append(float(train_acc))
            curve.validation_accuracy.append(float(val_acc))
            curve.mean_train_loss.append(float(loss))
        return curve


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise stable softmax. Argmax ties resolve to the lowest class index
    downstream because ``np.argmax`` returns the first maximum."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    np.exp(shifted, out=shifted)
    shifted /= shifted.sum(axis=-1, keepdims=True)
    return shifted


def _logits(weights: np.ndarray, bias: np.ndarray, X) -> np.ndarray:
    return np.asarray(X @ weights.T) + bias


def predict_proba(model: ModelState, features) -> np.ndarray:
    """Class-probability vector(s) for a sparse vector, dense vector, pair
    list, or matrix of inputs."""
    single = False
    if sp.issparse(features):
        X = features.tocsr()
    elif isinstance(features, np.ndarray):
        single = features.ndim == 1
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    else:  # list of (index, value) pairs
        dense = np.zeros((1, model.feature_dim))
        for index, value in features:
            if not 0 <= index < model.feature_dim:
                raise ValueError(f"feature index {index} out of range for feature_dim={model.feature_dim}")
            dense[0, index] += value
        X = dense
        single = True
    if X.shape[1] != model.feature_dim:
        raise ValueError(f"feature dimension mismatch: got {X.shape[1]}, model expects {model.feature_dim}")
    probs = softmax(_logits(model.weights, model.bias, X))
    return probs[0] if single else probs


def cross_entropy_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X,
    y: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy (+ L2 penalty on weights, not bias) and its gradient."""
    n = X.shape[0]
    probs = softmax(_logits(weights, bias, X))
    p_gold = probs[np.arange(n), y]
    loss = float(-np.log(np.clip(p_gold, _LOG_FLOOR, None)).mean())
    delta = probs
    delta[np.arange(n), y] -= 1.0
    delta /= n
    grad_w = np.asarray((X.T @ delta).T)
    grad_b = delta.sum(axis=0)
    if l2 > 0.0:
        loss += 0.5 * l2 * float(np.sum(weights * weights))
        grad_w = grad_w + l2 * weights
    return loss, grad_w, grad_b


class SoftmaxTextClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression with per-epoch training-dynamics capture.

    Accepts raw texts (hashed to ``feature_dim`` buckets), a SciPy sparse
    matrix, or a dense array.  Follows the scikit-learn estimator protocol
    (``fit``/``predict``/``predict_proba``/``score``, ``get_params``), so it
    composes with pipelines and model-selection utilities.

    Parameters mirror :class:`TrainConfig`.  ``fit`` accepts three keyword
    extras: ``validation=(X_val, y_val)`` enables early stopping,
    ``dynamics_writer`` (a :class:`cartograph.dynlog.LogWriter` with its
    header already written) receives one snapshot record per training
    instance per epoch, and ``guids`` names the training rows in that log.
    """

    def __init__(
        self,
        epochs: int = 20,
        batch_size: int = 96,
        learning_rate: float = 0.1,
        l2: float = 1e-4,
        patience: int = 10,
        improvement_epsilon: float = 0.0,
        seed: int = 0,
        feature_dim: int = DEFAULT_FEATURE_DIM,
        num_classes: int | None = None,
        keep_best_validation: bool = False,
    ):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.l2 = l2
        self.patience = patience
        self.improvement_epsilon = improvement_epsilon
        self.seed = seed
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        self.keep_best_validation = keep_best_validation

    def _to_matrix(self, X) -> sp.csr_matrix:
        if sp.issparse(X):
            return X.tocsr().astype(np.float64)
        if isinstance(X, np.ndarray):
            return sp.csr_matrix(np.atleast_2d(X.astype(np.float64)))
        if isinstance(X, (list, tuple)) and all(isinstance(item, str) for item in X):
            rows, cols, vals = [], [], []
            for r, text in enumerate(X):
                for index, value in featurize(text, self.feature_dim):
                    rows.append(r)
                    cols.append(index)
                    vals.append(value)
            return sp.coo_matrix(
                (np.asarray(vals, dtype=np.float64), (rows, cols)),
                shape=(len(X), self.feature_dim),
            ).tocsr()
        raise TypeError("X must be a sparse matrix, a dense array, or a list of texts")

    def fit(self, X, y, validation=None, guids=None, dynamics_writer: LogWriter | None = None):
        config = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            l2=self.l2,
            patience=self.patience,
            improvement_epsilon=self.improvement_epsilon,
            seed=self.seed,
            feature_dim=self.feature_dim,
        )
        X = self._to_matrix(X)
        y = np.asarray(y, dtype=np.int64)
        n = X.shape[0]
        if n == 0:
            raise ValueError("training split is empty")
        if y.shape != (n,):
            raise ValueError("y must be one label per row of X")
        n_classes = self.num_classes if self.num_classes is not None else int(y.max()) + 1
        n_classes = check_int(n_classes, "num_classes", minimum=2)
        if y.min() < 0 or y.max() >= n_classes:
            raise ValueError(f"labels must lie in [0, {n_classes})")

        X_val = y_val = None
        if validation is not None:
            X_val, y_val = validation
            X_val = self._to_matrix(X_val)
            y_val = np.asarray(y_val, dtype=np.int64)
            if X_val.shape[0] == 0:
                raise ValueError("validation split is empty")

        if guids is None:
            guids = [f"i{r:06d}" for r in range(n)]
        elif len(guids) != n:
            raise ValueError("guids must name every training row")
        snapshot_order = np.argsort(np.asarray(guids, dtype=object))

        d = X.shape[1]
        weights = np.zeros((n_classes, d))
        bias = np.zeros(n_classes)
        lr = config.learning_rate
        decay = 1.0 - lr * config.l2
        curve = CurveLog()

        best_val = -np.inf
        best_epoch = -1
        epochs_since_improvement = 0
        best_weights = best_bias = None
        completed = 0

        for epoch in range(config.epochs):
            order = generator(config.seed, epoch).permutation(n)
            for start in range(0, n, config.batch_size):
                batch = order[start : start + config.batch_size]
                Xb = X[batch]
                yb = y[batch]
                m = batch.size
                probs = softmax(_logits(weights, bias, Xb))
                probs[np.arange(m), yb] -= 1.0
                probs /= m
                if decay != 1.0:
                    weights *= decay
                weights -= lr * np.asarray((Xb.T @ probs).T)
                bias -= lr * probs.sum(axis=0)

            # Frozen snapshot pass: pure inference, no parameter updates.
            probs = softmax(_logits(weights, bias, X))
            preds = probs.argmax(axis=1)
            p_gold = probs[np.arange(n), y]
            mean_loss = float(-np.log(np.clip(p_gold, _LOG_FLOOR, None)).mean())
            if not np.isfinite(mean_loss) or not np.all(np.isfinite(weights)):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}: learning_rate={lr} is likely too high"
                )
            if dynamics_writer is not None:
                dynamics_writer.append_epoch(
                    epoch,
                    [guids[i] for i in snapshot_order],
                    y[snapshot_order],
                    p_gold[snapshot_order],
                    preds[snapshot_order],
                )
            train_acc = float((preds == y).mean())
            if X_val is not None:
                val_probs = softmax(_logits(weights, bias, X_val))
                val_acc = float((val_probs.argmax(axis=1) == y_val).mean())
            else:
                val_acc = float("nan")

            curve.train_accuracy.append(train_acc)
            curve.validation_accuracy.append(val_acc)
            curve.mean_train_loss.append(mean_loss)
            completed = epoch + 1

            if X_val is not None:
                if val_acc > best_val + config.improvement_epsilon:
                    best_val = val_acc
                    best_epoch = epoch
                    epochs_since_improvement = 0
                    if self.keep_best_validation:
                        best_weights = weights.copy()
                        best_bias = bias.copy()
                else:
                    epochs_since_improvement += 1
                    if epochs_since_improvement >= config.patience:
                        break

        if self.keep_best_validation and best_weights is not None:
            self.coef_ = best_weights
            self.intercept_ = best_bias
            self.final_epoch_ = best_epoch
        else:
            self.coef_ = weights
            self.intercept_ = bias
            self.final_epoch_ = completed - 1
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = d
        self.curve_ = curve
        self.n_epochs_completed_ = completed
        self.best_validation_accuracy_ = None if best_epoch < 0 else best_val
        self.best_validation_epoch_ = None if best_epoch < 0 else best_epoch
        if dynamics_writer is not None:
            dynamics_writer.flush()
        return self

    def _model(self) -> ModelState:
        return ModelState(weights=self.coef_, bias=self.intercept_, epoch=self.final_epoch_)

    def predict_proba(self, X) -> np.ndarray:
        return softmax(_logits(self.coef_, self.intercept_, self._to_matrix(X)))

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def train(
    dataset: Dataset,
    config: TrainConfig | None = None,
    log_sink: IO[bytes] | None = None,
    *,
    run_id: str = "run",
    dataset_name: str = "dataset",
    created_at: str | None = None,
    subset: Sequence[str] | None = None,
    keep_best_validation: bool = False,
) -> tuple[ModelState, CurveLog]:
    """Train on the dataset's train split, streaming dynamics to ``log_sink``.

    ``subset`` restricts training to exactly those guids (the retraining
    harness for selections).  The returned model is the one from the last
    completed epoch -- dynamics are defined over every trained epoch -- unless
    ``keep_best_validation`` asks for the best-validation checkpoint instead.
    """
    config = config or TrainConfig()
    train_instances = dataset.split("train")
    val_instances = dataset.split("validation")
    if not train_instances:
        raise DatasetError("train split is empty")
    if not val_instances:
        raise DatasetError("validation split is empty")

    if subset is not None:
        wanted = set(subset)
        missing = wanted - {inst.guid for inst in train_instances}
        if missing:
            raise DatasetError(f"subset names {len(missing)} guids not in the train split, e.g. {sorted(missing)[0]!r}")
        train_instances = [inst for inst in train_instances if inst.guid in wanted]

    feature_dim = dataset.feature_dim or config.feature_dim
    X = instances_to_matrix(train_instances, feature_dim)
    y = gold_labels(train_instances)
    X_val = instances_to_matrix(val_instances, feature_dim)
    y_val = gold_labels(val_instances)
    guids = [inst.guid for inst in train_instances]

    writer = None
    if log_sink is not None:
        meta = RunMeta(
            run_id=run_id,
            dataset_name=dataset_name,
            num_classes=dataset.num_classes,
            planned_epochs=config.epochs,
            num_train_instances=len(train_instances),
            created_at=created_at if created_at is not None else utc_now_iso(),
        )
        writer = LogWriter(log_sink, meta)
        writer.write_header()

    estimator = SoftmaxTextClassifier(
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        l2=config.l2,
        patience=config.patience,
        improvement_epsilon=config.improvement_epsilon,
        seed=config.seed,
        feature_dim=feature_dim,
        num_classes=dataset.num_classes,
        keep_best_validation=keep_best_validation,
    )
    estimator.fit(X, y, validation=(X_val, y_val), guids=guids, dynamics_writer=writer)
    return estimator._model(), estimator.curve_


def evaluate(model: ModelState, dataset: Dataset, split: str) -> float:
    """Accuracy of the model's argmax prediction on one split."""
    instances = dataset.split(split)
    if not instances:
        raise DatasetError(f"split {split!r} is empty")
    X = instances_to_matrix(instances, model.feature_dim)
    probs = softmax(_logits(model.weights, model.bias, X))
    return float((probs.argmax(axis=1) == gold_labels(instances)).mean())


def zero_model(num_classes: int, feature_dim: int) -> ModelState:
    """The untrained model: uniform probabilities everywhere (epoch -1)."""
    return ModelState(weights=np.zeros((num_classes, feature_dim)), bias=np.zeros(num_classes), epoch=-1)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------
#
# A checkpoint is a zip of NumPy .npy entries (NumPy's own .npz layout) plus
# a meta.json entry, written with fixed zip timestamps so that identical
# models produce byte-identical files.  np.load() can read the arrays
# directly.

_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)


def _zip_entry(zf: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, payload)


def save_model(path: str | Path, model: ModelState, extra: dict | None = None) -> None:
    meta = {
        "format": "cartograph-model",
        "version": 1,
        "num_classes": model.num_classes,
        "feature_dim": model.feature_dim,
        "epoch": model.epoch,
    }
    if extra:
        meta.update(extra)
    with zipfile.ZipFile(path, "w") as zf:
        for name, arr in (("weights.npy", model.weights), ("bias.npy", model.bias)):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.ascontiguousarray(np.asarray(arr, dtype=np.float64)), version=(1, 0))
            _zip_entry(zf, name, buf.getvalue())
        _zip_entry(zf, "meta.json", json.dumps(meta, indent=2, sort_keys=True).encode("utf-8"))


def load_model(path: str | Path) -> tuple[ModelState, dict]:
    with zipfile.ZipFile(path, "r") as zf:
        meta = json.loads(zf.read("meta.json"))
        weights = np.lib.format.read_array(io.BytesIO(zf.read("weights.npy")))
        bias = np.lib.format.read_array(io.BytesIO(zf.read("bias.npy")))
    if meta.get("format") != "cartograph-model":
        raise DatasetError(f"{path} is not a cartograph model checkpoint")
    return ModelState(weights=weights, bias=bias, epoch=int(meta["epoch"])), meta


def config_from_mapping(mapping: dict, base: TrainConfig | None = None) -> TrainConfig:
    """Build a TrainConfig from string/typed key-value pairs (config files)."""
    base = base or TrainConfig()
    values = {f.name: getattr(base, f.name) for f in fields(TrainConfig)}
    casts = {f.name: type(getattr(base, f.name)) for f in fields(TrainConfig)}
    for key, value in mapping.items():
        if key not in values:
            raise DatasetError(f"unknown training option {key!r}")
        try:
            values[key] = casts[key](value)
        except (TypeError, ValueError):
            raise DatasetError(f"bad value for training option {key!r}: {value!r}") from None
    return TrainConfig(**values)
