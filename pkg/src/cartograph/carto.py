"""Region classification, subset selection and mislabel-candidate ranking.

There are no fixed confidence/variability thresholds: region membership is
rank-based at caller-chosen fractions (default 0.33 each).  "Easy" instances
are ranked by confidence descending with variability as the tie-break (a
composite score is deliberately not invented), "hard" by confidence
ascending, and "ambiguous" by variability descending.  Ambiguous is carved
out first, so the three regions are always disjoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from ._rng import generator, sample_without_replacement
from ._validation import check_choice, check_fraction, check_int
from .dynamics import MetricsTable

REGIONS = ("easy_to_learn", "hard_to_learn", "ambiguous", "other")
STRATEGIES = ("random", "ambiguous", "easy", "hard")


@dataclass(frozen=True)
class SelectionSpec:
    """A reproducible subset-selection request."""

    strategy: str
    fraction: float
    seed: int = 0

    def __post_init__(self):
        check_choice(self.strategy, STRATEGIES, "strategy")
        object.__setattr__(self, "fraction", check_fraction(self.fraction, "fraction"))
        object.__setattr__(self, "seed", check_int(self.seed, "seed"))


@dataclass
class RegionAssignment:
    """Disjoint region per guid plus the fractions that produced it."""

    regions: dict[str, str]  # guid -> region name
    fractions: tuple[float, float, float]  # (f_easy, f_hard, f_ambiguous)

    def guids_in(self, region: str) -> list[str]:
        check_choice(region, REGIONS, "region")
        return sorted(g for g, r in self.regions.items() if r == region)

    def counts(self) -> dict[str, int]:
        out = {name: 0 for name in REGIONS}
        for region in self.regions.values():
            out[region] += 1
        return out


def subset_count(fraction: float, n: int) -> int:
    """Number of instances a fraction selects: round-half-up with a floor of 1.

    A fraction of exactly 0 selects nothing (used by classify for disabled
    regions).
    """
    check_fraction(fraction, "fraction", allow_zero=True)
    check_int(n, "n", minimum=1)
    if fraction == 0.0:
        return 0
    return max(1, math.floor(fraction * n + 0.5))


def _by_variability_desc(table: MetricsTable) -> list[int]:
    # ties -> higher confidence, then guid
    return sorted(
        range(len(table)),
        key=lambda i: (-table.variability[i], -table.confidence[i], table.guids[i]),
    )


def _by_confidence_desc(table: MetricsTable) -> list[int]:
    # ties -> lower variability, then guid
    return sorted(
        range(len(table)),
        key=lambda i: (-table.confidence[i], table.variability[i], table.guids[i]),
    )


def _by_confidence_asc(table: MetricsTable) -> list[int]:
    # ties -> lower variability, then guid
    return sorted(
        range(len(table)),
        key=lambda i: (table.confidence[i], table.variability[i], table.guids[i]),
    )


def classify(table: MetricsTable, f_easy: float = 0.33, f_hard: float = 0.33, f_ambiguous: float = 0.33) -> RegionAssignment:
    """Assign every instance to one region at the given fractions.

    Ambiguous claims its instances first (top variability); easy and hard are
    then drawn from the remainder by confidence rank.  Region sizes follow
    :func:`subset_count` of the full table size; in tiny tables where the
    rounded counts overlap, later regions take what is left.
    """
    f_easy = check_fraction(f_easy, "f_easy", allow_zero=True)
    f_hard = check_fraction(f_hard, "f_hard", allow_zero=True)
    f_ambiguous = check_fraction(f_ambiguous, "f_ambiguous", allow_zero=True)
    if f_easy + f_hard + f_ambiguous > 1.0 + 1e-12:
        raise ValueError("f_easy + f_hard + f_ambiguous must not exceed 1")
    n = len(table)
    if n == 0:
        raise ValueError("metrics table is empty")

    regions = {guid: "other" for guid in table.guids}

    n_ambiguous = subset_count(f_ambiguous, n)
    for i in _by_variability_desc(table)[:n_ambiguous]:
        regions[table.guids[i]] = "ambiguous"

    n_easy = subset_count(f_easy, n)
    taken = 0
    for i in _by_confidence_desc(table):
        if taken == n_easy:
            break
        guid = table.guids[i]
        if regions[guid] == "other":
            regions[guid] = "easy_to_learn"
            taken += 1

    n_hard = subset_count(f_hard, n)
    taken = 0
    for i in _by_confidence_asc(table):
        if taken == n_hard:
            break
        guid = table.guids[i]
        if regions[guid] == "other":
            regions[guid] = "hard_to_learn"
            taken += 1

    return RegionAssignment(regions=regions, fractions=(f_easy, f_hard, f_ambiguous))


def select(table: MetricsTable, spec: SelectionSpec) -> list[str]:
    """Select ``subset_count(fraction, n)`` guids per the strategy, sorted by guid.

    ``random`` draws uniformly without replacement from PCG64 seeded with
    ``spec.seed`` (see :mod:`cartograph._rng`); the other strategies are the
    deterministic rankings used by :func:`classify`.
    """
    n = len(table)
    if n == 0:
        raise ValueError("metrics table is empty")
    k = subset_count(spec.fraction, n)
    if spec.strategy == "random":
        order = sorted(range(n), key=lambda i: table.guids[i])
        picked = sample_without_replacement(n, k, generator(spec.seed))
        chosen = [table.guids[order[i]] for i in picked]
    elif spec.strategy == "ambiguous":
        chosen = [table.guids[i] for i in _by_variability_desc(table)[:k]]
    elif spec.strategy == "easy":
        chosen = [table.guids[i] for i in _by_confidence_desc(table)[:k]]
    else:  # "hard"
        chosen = [table.guids[i] for i in _by_confidence_asc(table)[:k]]
    return sorted(chosen)


def rank_hard_to_learn(table: MetricsTable, k: int) -> list[str]:
    """The k lowest-confidence guids, in rank order: the mislabel-candidate queue.

    Ties break toward lower variability, then guid, so ``rank(k)`` is always
    a prefix of ``rank(k + 1)``.
    """
    n = len(table)
    k = check_int(k, "k", minimum=1, maximum=n)
    return [table.guids[i] for i in _by_confidence_asc(table)[:k]]


def write_selection(
    path: str | Path,
    guids: list[str],
    spec: SelectionSpec,
    *,
    run_id: str | None = None,
    extra: dict | None = None,
) -> Path:
    """Write one guid per line plus a JSON provenance manifest alongside.

    Returns the manifest path (``<path>.manifest.json``).
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for guid in guids:
            handle.write(guid + "\n")
    manifest = {
        "strategy": spec.strategy,
        "fraction": spec.fraction,
        "seed": spec.seed,
        "count": len(guids),
        "source_run_id": run_id,
    }
    if extra:
        manifest.update(extra)
    manifest_path = path.with_name(path.name + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest_path


def read_selection(path: str | Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as handle:
        return [line.strip() for line in handle if line.strip()]
