"""Rank-sum test and mixed-design ANOVA for preference study data.

Small-sample rank sums are computed exactly; larger or tied samples use the
normal approximation with midranks, tie-corrected variance, and a 0.5
continuity correction. The ANOVA is a split-plot decomposition: mobility
group varies between subjects, method within subjects, every subject rating
every method (balanced within; group sizes may differ).

The F-distribution tail comes from an in-repo regularized incomplete beta
(continued fraction), so there is no numeric dependency beyond numpy.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

EXACT_RANKSUM_MAX_N = 12  # exact enumeration bound on n_a + n_b


class EmptySample(Exception):
    """A test was asked to compare an empty sample."""


class UnbalancedWithin(Exception):
    """A subject is missing ratings for some within-subject condition."""


# --- special functions ----------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    raise RuntimeError("incomplete beta continued fraction failed to converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError("shape parameters must be positive")
    if x < 0.0 or x > 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # symmetric split keeps the continued fraction in its fast region
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_value: float, df1: float, df2: float) -> float:
    """Upper tail P(F >= f) for an F(df1, df2) variable."""
    if f_value <= 0.0:
        return 1.0
    if math.isinf(f_value):
        return 0.0
    x = df2 / (df2 + df1 * f_value)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


# --- rank-sum test ---------------------------------------------------------------

@dataclass(frozen=True)
class RankSumResult:
    statistic: float     # rank sum of sample a (midranks)
    p_value: float       # two-sided
    method: str          # "exact" or "normal"


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    sorted_vals = values[order]
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average of ranks i+1..j+1
        i = j + 1
    return ranks


def rank_sum(sample_a, sample_b) -> RankSumResult:
    """Two-sided Wilcoxon rank-sum test on two independent samples."""
    a = np.asarray(list(sample_a), dtype=float)
    b = np.asarray(list(sample_b), dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise EmptySample("rank_sum requires two nonempty samples")
    n_a, n_b = len(a), len(b)
    pooled = np.concatenate([a, b])
    has_ties = len(np.unique(pooled)) < len(pooled)

    if n_a + n_b <= EXACT_RANKSUM_MAX_N and not has_ties:
        ranks = _midranks(pooled)  # no ties, so these are plain ranks
        w_obs = float(np.sum(ranks[:n_a]))
        n = n_a + n_b
        mu = n_a * (n + 1) / 2.0
        # enumerate every assignment of ranks to sample a
        extreme = 0
        total = 0
        for combo in itertools.combinations(range(1, n + 1), n_a):
            total += 1
            if abs(sum(combo) - mu) >= abs(w_obs - mu) - 1e-12:
                extreme += 1
        return RankSumResult(statistic=w_obs, p_value=extreme / total, method="exact")

    ranks = _midranks(pooled)
    w_obs = float(np.sum(ranks[:n_a]))
    n = n_a + n_b
    mu = n_a * (n + 1) / 2.0
    # tie-corrected variance of the rank sum
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_counts.astype(float) ** 3 - tie_counts))
    var = n_a * n_b * (n + 1) / 12.0
    if n > 1:
        var -= n_a * n_b * tie_term / (12.0 * n * (n - 1))
    if var <= 0.0:
        return RankSumResult(statistic=w_obs, p_value=1.0, method="normal")
    z = max(0.0, abs(w_obs - mu) - 0.5) / math.sqrt(var)
    return RankSumResult(statistic=w_obs, p_value=min(1.0, 2.0 * normal_sf(z)), method="normal")


# --- mixed-design ANOVA -----------------------------------------------------------

@dataclass(frozen=True)
class AnovaEffect:
    name: str
    ss: float
    df: int
    ms: float
    f_value: float
    p_value: float


@dataclass(frozen=True)
class AnovaResult:
    effects: tuple          # between, within, interaction
    ss_subjects_within: float
    df_subjects_within: int
    ss_error_within: float
    df_error_within: int


def mixed_anova(records) -> AnovaResult:
    """Split-plot ANOVA on records with subject, group, condition, rating.

    Records are dicts (or tuples) carrying: subject id, between-group label,
    within-condition label, numeric rating. Every subject must rate every
    condition exactly once (else UnbalancedWithin); groups may have unequal
    subject counts.
    """
    rows = []
    for rec in records:
        if isinstance(rec, dict):
            rows.append((rec["subject"], rec["group"], rec["condition"], float(rec["rating"])))
        else:
            subject, group, condition, rating = rec
            rows.append((subject, group, condition, float(rating)))
    if not rows:
        raise EmptySample("mixed_anova requires at least one record")

    conditions = sorted({r[2] for r in rows})
    p = len(conditions)
    by_subject = defaultdict(dict)
    subject_group = {}
    for subject, group, condition, rating in rows:
        if condition in by_subject[subject]:
            raise UnbalancedWithin(f"subject {subject!r} rated condition {condition!r} twice")
        by_subject[subject][condition] = rating
        if subject_group.setdefault(subject, group) != group:
            raise UnbalancedWithin(f"subject {subject!r} appears in two groups")
    for subject, ratings in by_subject.items():
        if set(ratings) != set(conditions):
            missing = sorted(set(conditions) - set(ratings))
            raise UnbalancedWithin(f"subject {subject!r} missing conditions {missing}")

    subjects = sorted(by_subject)
    groups = sorted({subject_group[s] for s in subjects})
    if len(groups) < 2:
        raise ValueError("mixed_anova needs at least two between-subject groups")
    if p < 2:
        raise ValueError("mixed_anova needs at least two within-subject conditions")
    n_subjects = len(subjects)
    group_subjects = {g: [s for s in subjects if subject_group[s] == g] for g in groups}
    for g, members in group_subjects.items():
        if not members:
            raise EmptySample(f"group {g!r} has no subjects")

    grand = np.mean([by_subject[s][c] for s in subjects for c in conditions])
    subj_mean = {s: np.mean([by_subject[s][c] for c in conditions]) for s in subjects}
    group_mean = {g: np.mean([subj_mean[s] for s in group_subjects[g]]) for g in groups}
    cond_mean = {c: np.mean([by_subject[s][c] for s in subjects]) for c in conditions}
    cell_mean = {
        (g, c): np.mean([by_subject[s][c] for s in group_subjects[g]])
        for g in groups for c in conditions
    }

    ss_between = p * sum(
        len(group_subjects[g]) * (group_mean[g] - grand) ** 2 for g in groups
    )
    ss_subj_within = p * sum(
        (subj_mean[s] - group_mean[subject_group[s]]) ** 2 for s in subjects
    )
    ss_within_cond = n_subjects * sum((cond_mean[c] - grand) ** 2 for c in conditions)
    ss_interaction = sum(
        len(group_subjects[g])
        * (cell_mean[(g, c)] - group_mean[g] - cond_mean[c] + grand) ** 2
        for g in groups for c in conditions
    )
    ss_error_within = sum(
        (by_subject[s][c] - cell_mean[(subject_group[s], c)]
         - subj_mean[s] + group_mean[subject_group[s]]) ** 2
        for s in subjects for c in conditions
    )

    df_between = len(groups) - 1
    df_subj_within = n_subjects - len(groups)
    df_cond = p - 1
    df_interaction = df_between * df_cond
    df_error_within = df_subj_within * df_cond
    if df_subj_within <= 0 or df_error_within <= 0:
        raise EmptySample("not enough subjects for within-group error terms")

    ms_subj_within = ss_subj_within / df_subj_within
    ms_error_within = ss_error_within / df_error_within

    def effect(name, ss, df, ms_error, df_error):
        ms = ss / df
        if ms_error <= 0.0:
            # degenerate: no residual variance at all
            if ms <= 0.0:
                return AnovaEffect(name, ss, df, ms, 0.0, 1.0)
            return AnovaEffect(name, ss, df, ms, math.inf, 0.0)
        f_value = ms / ms_error
        return AnovaEffect(name, ss, df, ms, f_value, f_sf(f_value, df, df_error))

    effects = (
        effect("group", ss_between, df_between, ms_subj_within, df_subj_within),
        effect("condition", ss_within_cond, df_cond, ms_error_within, df_error_within),
        effect("interaction", ss_interaction, df_interaction, ms_error_within, df_error_within),
    )
    return AnovaResult(
        effects=effects,
        ss_subjects_within=float(ss_subj_within),
        df_subjects_within=df_subj_within,
        ss_error_within=float(ss_error_within),
        df_error_within=df_error_within,
    )
