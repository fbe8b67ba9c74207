import json

import numpy as np
import pytest

from cartograph import (
    MetricsTable,
    NoiseSpec,
    TrainConfig,
    eval_detection,
    inject_noise,
    make_cluster_dataset,
    permutation_pvalue,
    run_benchmark,
)
from cartograph._rng import generator
from conftest import FIXED_TIME


def metrics_table(confidence, guids=None):
    n = len(confidence)
    guids = guids or [f"g{i:04d}" for i in range(n)]
    return MetricsTable(
        guids=list(guids),
        confidence=np.asarray(confidence, dtype=float),
        variability=np.zeros(n),
        correctness=np.zeros(n),
        epochs_used=np.full(n, 5, dtype=np.int64),
    )


def small_dataset(**overrides):
    params = dict(n_train=100, n_validation=20, n_test=20, num_classes=4, feature_dim=8, seed=3)
    params.update(overrides)
    return make_cluster_dataset(**params)


class TestInjectNoise:
    def test_rate_zero_changes_nothing(self):
        dataset = small_dataset()
        noisy, flipped = inject_noise(dataset, NoiseSpec(rate=0.0, seed=1))
        assert flipped == set()
        assert noisy.instances == dataset.instances

    def test_rate_one_flips_every_train_instance(self):
        dataset = small_dataset()
        noisy, flipped = inject_noise(dataset, NoiseSpec(rate=1.0, seed=1))
        train_guids = {inst.guid for inst in dataset.split("train")}
        assert flipped == train_guids
        original = {inst.guid: inst.gold for inst in dataset.instances}
        for inst in noisy.split("train"):
            assert inst.gold != original[inst.guid]

    def test_exact_flip_count_and_validity(self):
        dataset = small_dataset(n_train=1000)
        noisy, flipped = inject_noise(dataset, NoiseSpec(rate=0.1, seed=2))
        assert len(flipped) == 100
        original = {inst.guid: inst.gold for inst in dataset.instances}
        for inst in noisy.split("train"):
            if inst.guid in flipped:
                assert inst.gold != original[inst.guid]
                assert 0 <= inst.gold < dataset.num_classes
            else:
                assert inst.gold == original[inst.guid]

    def test_other_splits_untouched(self):
        dataset = small_dataset()
        noisy, _ = inject_noise(dataset, NoiseSpec(rate=0.5, seed=4))
        for split in ("validation", "test"):
            assert noisy.split(split) == dataset.split(split)

    def test_seeded_and_reproducible(self):
        dataset = small_dataset()
        first = inject_noise(dataset, NoiseSpec(rate=0.2, seed=9))
        second = inject_noise(dataset, NoiseSpec(rate=0.2, seed=9))
        third = inject_noise(dataset, NoiseSpec(rate=0.2, seed=10))
        assert first[1] == second[1]
        assert first[0].instances == second[0].instances
        assert first[1] != third[1]

    def test_two_class_flip_is_the_other_class(self):
        dataset = small_dataset(num_classes=2)
        noisy, flipped = inject_noise(dataset, NoiseSpec(rate=1.0, seed=0))
        original = {inst.guid: inst.gold for inst in dataset.instances}
        for inst in noisy.split("train"):
            assert inst.gold == 1 - original[inst.guid]


class TestEvalDetection:
    def test_perfect_ranking(self):
        table = metrics_table([0.1, 0.2, 0.9, 0.95])
        flipped = {"g0000", "g0001"}
        report = eval_detection(table, flipped, k=2)
        assert report.precision_at_k == 1.0
        assert report.recall_at_k == 1.0
        assert report.base_rate == 0.5
        assert report.lift == 2.0
        assert report.mean_confidence_flipped < report.mean_confidence_clean

    def test_empty_flipped_set_is_all_zero_with_warning(self):
        table = metrics_table([0.1, 0.2, 0.3])
        with pytest.warns(UserWarning, match="lift"):
            report = eval_detection(table, set(), k=2)
        assert report.precision_at_k == 0.0
        assert report.recall_at_k == 0.0
        assert report.lift == 0.0

    def test_random_ranking_precision_near_base_rate(self):
        # confidence carries no signal -> precision@k concentrates on the base
        # rate; the binomial spread over many draws bounds the deviation
        rng = generator(55)
        n, k = 1000, 100
        table = metrics_table(rng.random(n))
        flips = rng.permutation(n)[:100]
        flipped = {f"g{i:04d}" for i in flips}
        report = eval_detection(table, flipped, k)
        assert abs(report.precision_at_k - 0.1) < 0.09

    def test_unknown_guid_rejected(self):
        table = metrics_table([0.5, 0.6])
        with pytest.raises(ValueError, match="not present"):
            eval_detection(table, {"missing"}, k=1)

    def test_k_out_of_range_rejected(self):
        table = metrics_table([0.5, 0.6])
        with pytest.raises(ValueError):
            eval_detection(table, {"g0000"}, k=3)

    def test_report_serializes(self):
        table = metrics_table([0.1, 0.9])
        report = eval_detection(table, {"g0000"}, k=1)
        payload = json.loads(report.to_json())
        assert payload["precision_at_k"] == 1.0
        assert "lift" in report.to_text()


class TestPermutationTest:
    def test_separated_groups_give_small_pvalue(self):
        rng = generator(7)
        low = rng.random(50) * 0.2
        high = 0.8 + rng.random(200) * 0.2
        assert permutation_pvalue(low, high, n_resamples=1000, seed=3) < 0.01

    def test_identical_distribution_gives_large_pvalue(self):
        rng = generator(8)
        pool = rng.random(300)
        p = permutation_pvalue(pool[:60], pool[60:], n_resamples=500, seed=4)
        assert p > 0.05

    def test_deterministic_given_seed(self):
        rng = generator(9)
        a, b = rng.random(30), rng.random(90)
        assert permutation_pvalue(a, b, seed=5) == permutation_pvalue(a, b, seed=5)


class TestRunBenchmark:
    def test_separable_fixture_detects_flips(self):
        dataset = make_cluster_dataset(
            n_train=400, n_validation=60, n_test=60, num_classes=4, feature_dim=30, seed=5
        )
        config = TrainConfig(epochs=8, seed=7)
        report = run_benchmark(dataset, config, NoiseSpec(rate=0.1, seed=3), created_at=FIXED_TIME)
        assert report.n_flipped == 40
        assert report.k == 40
        assert report.lift >= 5.0
        assert report.mean_confidence_flipped < report.mean_confidence_clean

    def test_rate_zero_is_degenerate_but_defined(self):
        dataset = small_dataset()
        config = TrainConfig(epochs=2, seed=1)
        with pytest.warns(UserWarning, match="lift"):
            report = run_benchmark(dataset, config, NoiseSpec(rate=0.0, seed=1), created_at=FIXED_TIME)
        assert report.lift == 0.0
        assert report.n_flipped == 0

    def test_same_seeds_bit_identical_report(self):
        dataset = small_dataset()
        config = TrainConfig(epochs=3, seed=2)
        spec = NoiseSpec(rate=0.1, seed=6)
        first = run_benchmark(dataset, config, spec, created_at=FIXED_TIME)
        second = run_benchmark(dataset, config, spec, created_at=FIXED_TIME)
        assert first == second

    def test_seed_isolation(self):
        # changing the training seed must not change which labels were flipped
        dataset = small_dataset()
        spec = NoiseSpec(rate=0.2, seed=6)
        _, flipped_a = inject_noise(dataset, spec)
        _, flipped_b = inject_noise(dataset, spec)
        assert flipped_a == flipped_b
        report_a = run_benchmark(dataset, TrainConfig(epochs=2, seed=1), spec, created_at=FIXED_TIME)
        report_b = run_benchmark(dataset, TrainConfig(epochs=2, seed=99), spec, created_at=FIXED_TIME)
        assert report_a.n_flipped == report_b.n_flipped == len(flipped_a)
