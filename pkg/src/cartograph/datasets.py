"""Bundled synthetic datasets.

Real benchmark corpora cannot ship inside a small package, so the demo and
test datasets are generated deterministically from a seed:

* :func:`make_demo_corpus` -- a topic-vocabulary text-classification set.
  Each class owns a vocabulary block; documents mix class words with shared
  filler words.  A configurable slice of documents draws from *two* classes
  at once, which is what puts genuinely ambiguous instances on the map.  The
  OOD split shifts the mixture toward filler words and shortens documents.
* :func:`make_cluster_dataset` -- Gaussian feature clusters, linearly
  separable at the default spacing.  Used for trainer sanity checks and for
  the label-noise benchmark, where ground truth must be known.

Both are pure functions of their arguments; the same seed always yields the
same instances, guids included.
"""

from __future__ import annotations

import numpy as np

from ._rng import generator
from ._validation import check_fraction, check_int
from .trainer import Dataset, Instance


def _documents(
    rng: np.random.Generator,
    n_docs: int,
    num_classes: int,
    class_vocab: list[list[str]],
    shared_vocab: list[str],
    class_word_rate: float,
    length_range: tuple[int, int],
    mixed_fraction: float,
) -> list[tuple[int, str]]:
    docs: list[tuple[int, str]] = []
    lo, hi = length_range
    for _ in range(n_docs):
        gold = int(rng.integers(0, num_classes))
        other = int(rng.integers(0, num_classes - 1))
        other = other if other < gold else other + 1
        mixed = rng.random() < mixed_fraction
        length = int(rng.integers(lo, hi + 1))
        words = []
        for _ in range(length):
            if rng.random() < class_word_rate:
                source_class = gold
                if mixed and rng.random() < 0.5:
                    source_class = other
                vocab = class_vocab[source_class]
            else:
                vocab = shared_vocab
            words.append(vocab[int(rng.integers(0, len(vocab)))])
        docs.append((gold, " ".join(words)))
    return docs


def make_demo_corpus(
    n_train: int = 6000,
    n_validation: int = 800,
    n_test: int = 800,
    n_ood: int = 400,
    num_classes: int = 4,
    seed: int = 11,
    mixed_fraction: float = 0.12,
) -> Dataset:
    """Deterministic synthetic text-classification corpus with all four splits."""
    check_int(n_train, "n_train", minimum=1)
    check_int(num_classes, "num_classes", minimum=2)
    check_fraction(mixed_fraction, "mixed_fraction", allow_zero=True)
    rng = generator(seed)

    class_vocab = [[f"topic{c}term{j:03d}" for j in range(120)] for c in range(num_classes)]
    shared_vocab = [f"filler{j:03d}" for j in range(240)]

    instances: list[Instance] = []
    plan = (
        ("train", n_train, 0.55, (20, 60), mixed_fraction),
        ("validation", n_validation, 0.55, (20, 60), mixed_fraction),
        ("test", n_test, 0.55, (20, 60), mixed_fraction),
        # Distribution shift: mostly filler words, short documents, and twice
        # the topic mixing.
        ("ood", n_ood, 0.18, (5, 16), min(1.0, 2 * mixed_fraction)),
    )
    for split, count, class_rate, lengths, mixed in plan:
        if count == 0:
            continue
        docs = _documents(rng, count, num_classes, class_vocab, shared_vocab, class_rate, lengths, mixed)
        for i, (gold, text) in enumerate(docs):
            instances.append(Instance(guid=f"{split}-{i:06d}", split=split, gold=gold, text=text))
    return Dataset(instances=instances, num_classes=num_classes, feature_dim=0)


def make_cluster_dataset(
    n_train: int = 2000,
    n_validation: int = 200,
    n_test: int = 200,
    num_classes: int = 4,
    feature_dim: int = 50,
    separation: float = 3.0,
    seed: int = 5,
) -> Dataset:
    """Gaussian clusters (one per class, unit noise) as a feature dataset.

    At ``separation >= 3`` the classes are linearly separable for practical
    purposes, so a convex model can reach near-perfect training accuracy.
    """
    check_int(num_classes, "num_classes", minimum=2)
    check_int(feature_dim, "feature_dim", minimum=2)
    rng = generator(seed)
    centers = rng.standard_normal((num_classes, feature_dim))
    centers *= separation / np.linalg.norm(centers, axis=1, keepdims=True) * np.sqrt(feature_dim)

    instances: list[Instance] = []
    for split, count in (("train", n_train), ("validation", n_validation), ("test", n_test)):
        if count == 0:
            continue
        golds = rng.integers(0, num_classes, size=count)
        noise = rng.standard_normal((count, feature_dim))
        points = centers[golds] + noise
        for i in range(count):
            features = tuple((j, float(points[i, j])) for j in range(feature_dim))
            instances.append(
                Instance(guid=f"{split}-{i:06d}", split=split, gold=int(golds[i]), features=features)
            )
    return Dataset(instances=instances, num_classes=num_classes, feature_dim=feature_dim)
