"""Rank-sum test, split-plot ANOVA, and the distribution helpers."""
import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

import oracles
from handoverkit.stats import (
    EmptySample,
    UnbalancedWithin,
    f_sf,
    mixed_anova,
    normal_sf,
    rank_sum,
    regularized_incomplete_beta,
)


class TestDistributionHelpers:
    def test_incomplete_beta_matches_scipy(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b = rng.uniform(0.5, 20, 2)
            x = float(rng.uniform(0, 1))
            assert regularized_incomplete_beta(a, b, x) == pytest.approx(
                scipy.special.betainc(a, b, x), abs=1e-10
            )

    def test_f_sf_matches_scipy(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            f = float(rng.uniform(0, 12))
            df1 = int(rng.integers(1, 10))
            df2 = int(rng.integers(2, 40))
            assert f_sf(f, df1, df2) == pytest.approx(
                scipy.stats.f.sf(f, df1, df2), abs=1e-10
            )

    def test_normal_sf_matches_scipy(self):
        for z in np.linspace(-6, 6, 121):
            assert normal_sf(float(z)) == pytest.approx(
                scipy.stats.norm.sf(z), abs=1e-12
            )


class TestRankSum:
    def test_extreme_separation_of_three_vs_three_gives_point_one(self):
        result = rank_sum([1, 2, 3], [10, 11, 12])
        assert result.method == "exact"
        assert result.statistic == 6.0
        assert result.p_value == pytest.approx(0.1, abs=1e-12)

    def test_exact_path_matches_enumeration_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n_a = int(rng.integers(2, 6))
            n_b = int(rng.integers(2, 6))
            pool = rng.permutation(100)[: n_a + n_b]  # distinct values, no ties
            a, b = pool[:n_a].tolist(), pool[n_a:].tolist()
            result = rank_sum(a, b)
            assert result.method == "exact"
            assert result.p_value == pytest.approx(
                oracles.ranksum_exact_p(a, b), abs=1e-12
            )

    def test_exact_p_is_symmetric_in_the_samples(self):
        a, b = [4, 9, 17], [1, 6, 12, 20]
        assert rank_sum(a, b).p_value == pytest.approx(rank_sum(b, a).p_value)

    def test_large_samples_use_the_normal_approximation(self):
        rng = np.random.default_rng(13)
        a = rng.normal(0, 1, 20).tolist()
        b = rng.normal(1, 1, 20).tolist()
        result = rank_sum(a, b)
        assert result.method == "normal"
        assert 0.0 <= result.p_value <= 1.0

    def test_tied_data_matches_scipy_mann_whitney(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            a = rng.integers(1, 6, size=15).tolist()
            b = rng.integers(1, 6, size=18).tolist()
            result = rank_sum(a, b)
            assert result.method == "normal"
            u = result.statistic - len(a) * (len(a) + 1) / 2.0
            expected = scipy.stats.mannwhitneyu(
                a, b, alternative="two-sided", method="asymptotic"
            )
            assert u == pytest.approx(float(expected.statistic))
            assert result.p_value == pytest.approx(float(expected.pvalue), abs=1e-10)

    def test_all_identical_values_give_p_one(self):
        result = rank_sum([3, 3, 3, 3, 3, 3, 3], [3, 3, 3, 3, 3, 3, 3])
        assert result.p_value == 1.0

    def test_empty_sample_raises(self):
        with pytest.raises(EmptySample):
            rank_sum([], [1, 2])

    def test_null_calibration_near_nominal_level(self):
        rng = np.random.default_rng(97)
        hits = 0
        trials = 1000
        for _ in range(trials):
            a = rng.normal(size=30).tolist()
            b = rng.normal(size=30).tolist()
            if rank_sum(a, b).p_value < 0.05:
                hits += 1
        assert 0.03 <= hits / trials <= 0.07


def eight_subject_fixture():
    ratings = {
        ("s1", "g1"): (3, 5),
        ("s2", "g1"): (2, 4),
        ("s3", "g1"): (4, 6),
        ("s4", "g1"): (3, 6),
        ("s5", "g2"): (5, 4),
        ("s6", "g2"): (6, 5),
        ("s7", "g2"): (4, 3),
        ("s8", "g2"): (5, 5),
    }
    records = []
    for (subject, group), (r1, r2) in ratings.items():
        records.append(
            {"subject": subject, "group": group, "condition": "c1", "rating": r1}
        )
        records.append(
            {"subject": subject, "group": group, "condition": "c2", "rating": r2}
        )
    return records


class TestMixedAnova:
    def test_f_values_match_definitional_sums_of_squares(self):
        records = eight_subject_fixture()
        result = mixed_anova(records)
        oracle = oracles.anova_definitional(
            [(r["subject"], r["group"], r["condition"], r["rating"]) for r in records]
        )
        between, within, interaction = result.effects
        assert between.ss == pytest.approx(oracle["group"]["ss"], abs=1e-9)
        assert within.ss == pytest.approx(oracle["condition"]["ss"], abs=1e-9)
        assert interaction.ss == pytest.approx(oracle["interaction"]["ss"], abs=1e-9)
        assert between.f_value == pytest.approx(oracle["group"]["f"], abs=1e-9)
        assert within.f_value == pytest.approx(oracle["condition"]["f"], abs=1e-9)
        assert interaction.f_value == pytest.approx(oracle["interaction"]["f"], abs=1e-9)
        assert result.ss_subjects_within == pytest.approx(
            oracle["subjects_within"]["ss"], abs=1e-9
        )
        assert result.ss_error_within == pytest.approx(oracle["error"]["ss"], abs=1e-9)
        # p-values follow from the F distribution
        assert between.p_value == pytest.approx(
            scipy.stats.f.sf(between.f_value, between.df, result.df_subjects_within),
            abs=1e-10,
        )
        assert within.p_value == pytest.approx(
            scipy.stats.f.sf(within.f_value, within.df, result.df_error_within),
            abs=1e-10,
        )

    def test_tuple_records_equal_dict_records(self):
        dict_records = eight_subject_fixture()
        tuple_records = [
            (r["subject"], r["group"], r["condition"], r["rating"])
            for r in dict_records
        ]
        a = mixed_anova(dict_records)
        b = mixed_anova(tuple_records)
        for ea, eb in zip(a.effects, b.effects):
            assert ea == eb

    def test_injected_condition_effect_is_overwhelming(self):
        rng = np.random.default_rng(23)
        records = []
        for i in range(12):
            group = "g1" if i < 6 else "g2"
            for j, condition in enumerate(["c1", "c2", "c3"]):
                records.append(
                    (
                        f"s{i}",
                        group,
                        condition,
                        float(j) + rng.normal(0, 1e-3),
                    )
                )
        result = mixed_anova(records)
        condition_effect = result.effects[1]
        assert condition_effect.p_value < 1e-6

    def test_missing_condition_for_a_subject_raises(self):
        records = eight_subject_fixture()
        records = [
            r for r in records if not (r["subject"] == "s3" and r["condition"] == "c2")
        ]
        with pytest.raises(UnbalancedWithin):
            mixed_anova(records)

    def test_random_balanced_designs_match_the_oracle(self):
        rng = np.random.default_rng(29)
        for _ in range(5):
            n_per_group = int(rng.integers(3, 6))
            conditions = [f"c{k}" for k in range(int(rng.integers(2, 4)))]
            records = []
            idx = 0
            for group in ["g1", "g2", "g3"]:
                for _ in range(n_per_group):
                    subject = f"s{idx}"
                    idx += 1
                    for condition in conditions:
                        records.append(
                            (subject, group, condition, float(rng.integers(1, 8)))
                        )
            result = mixed_anova(records)
            oracle = oracles.anova_definitional(records)
            assert result.effects[0].f_value == pytest.approx(
                oracle["group"]["f"], abs=1e-9
            )
            assert result.effects[1].f_value == pytest.approx(
                oracle["condition"]["f"], abs=1e-9
            )
            assert result.effects[2].f_value == pytest.approx(
                oracle["interaction"]["f"], abs=1e-9
            )
