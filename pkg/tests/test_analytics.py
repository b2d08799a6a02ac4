from __future__ import annotations

import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pearson_def, spearman_d2, spearman_def, t_two_sided_p
from tweetmine import analytics
from tweetmine.analytics import (
    InsufficientData,
    UndefinedCorrelation,
    correlation_report,
    group_map,
    keyword_map,
    keyword_matches,
    month_range,
    monthly_series,
    pearson,
    permutation_pvalue,
    share_percent,
    spearman,
    state_distribution,
    state_distributions,
    strength_band,
    topic_shares,
)
from tweetmine.classify import MessageClass
from tweetmine.survey import Question, QuestionGroup

P, C = MessageClass.PROMOTIONAL, MessageClass.CONSUMER
STATES = [f"S{i:02d}" for i in range(51)]


def test_share_arithmetic():
    assert share_percent(12_500, 93_693) == 13.34
    assert share_percent(8_628, 241_988) == 3.57


def test_topic_shares_denominator_is_whole_class():
    assign = {"a": [(1, 0.6), (2, 0.3)], "b": [(1, 0.9)], "c": [], "d": [(2, 0.5)]}
    classes = {"a": C, "b": C, "c": C, "d": P}
    assert topic_shares(assign, classes, C) == [(1, 2, pytest.approx(200 / 3)), (2, 1, pytest.approx(100 / 3))]
    assert topic_shares(assign, classes, C, excluded=[1]) == [(2, 1, pytest.approx(100 / 3))]
    assert topic_shares({"x": [(4, 1.0)]}, {"x": C}, C) == [(4, 1, 100.0)]


def test_topic_counted_once_per_message():
    assign = {"a": [(1, 0.5), (1, 0.5)]}
    assert topic_shares(assign, {"a": C}, C) == [(1, 1, 100.0)]


def test_monthly_series_is_dense_and_partitions():
    assign = {"a": [(0, 1.0)], "b": [(0, 1.0)], "c": [(0, 1.0)], "d": [(0, 1.0)], "e": [(1, 1.0)]}
    classes = dict.fromkeys(assign, C)
    months = {"a": "2016-01", "b": "2016-01", "c": "2016-01", "d": "2016-03", "e": "2016-02"}
    s = monthly_series(assign, classes, months, 0, C)
    assert s == {"2016-01": 3, "2016-02": 0, "2016-03": 1}
    assert sum(s.values()) == topic_shares(assign, classes, C)[0][1]
    assert month_range("2016-11", "2017-02") == ["2016-11", "2016-12", "2017-01", "2017-02"]


def test_pearson_hand_cases():
    assert pearson([1, 2, 3], [2, 4, 6]).coefficient == pytest.approx(1.0)
    r = pearson([1, 2, 3, 4], [1, 3, 2, 4])
    assert r.coefficient == 0.8
    t = 0.8 * math.sqrt(2) / math.sqrt(1 - 0.64)
    assert t == pytest.approx(1.8856, abs=1e-4)
    assert r.p_value == pytest.approx(t_two_sided_p(0.8, 4), abs=1e-12)
    assert r.p_value == pytest.approx(0.20, abs=0.005)


def test_spearman_hand_case():
    x = dict(zip("abcd", [1, 2, 3, 4]))
    y = dict(zip("abcd", [1, 3, 2, 4]))
    res = spearman(x, y)
    assert res.coefficient == 0.8 == 1 - 6 * 2 / (4 * 15)
    assert res.n == 4


def test_correlation_errors():
    with pytest.raises(InsufficientData):
        pearson([1, 2], [1, 2])
    with pytest.raises(UndefinedCorrelation):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(InsufficientData):
        spearman({"a": 1, "b": 2, "c": 3}, {"a": 1, "b": 2, "z": 3})


def test_spearman_uses_state_intersection():
    x = {"a": 1, "b": 2, "c": 3, "d": 4, "only_x": 99}
    y = {"a": 10, "b": 20, "c": 30, "d": 40, "only_y": -5}
    assert spearman(x, y).n == 4 and spearman(x, y).coefficient == pytest.approx(1.0)


@given(st.integers(3, 51), st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=150)
def test_against_definitional_oracle(n, seed, ties):
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.normal(size=n)
    y = 0.5 * x + rng.normal(size=n)
    if ties:
        x, y = np.round(x), np.round(y * 2) / 2
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    r = pearson(x, y)
    assert r.coefficient == pytest.approx(pearson_def(list(x), list(y)), abs=1e-12)
    xm = dict(zip(STATES, x))
    ym = dict(zip(STATES, y))
    rho = spearman(xm, ym)
    assert rho.coefficient == pytest.approx(spearman_def(list(x), list(y)), abs=1e-12)


def test_pvalue_against_numeric_integration():
    for r, n in [(0.1, 10), (0.5, 5), (-0.3, 51), (0.95, 4), (0.0, 20)]:
        assert analytics._t_pvalue(r, n) == pytest.approx(t_two_sided_p(r, n), abs=1e-12)


def test_d2_formula_agrees_without_ties():
    rng = np.random.Generator(np.random.PCG64(5))
    x, y = rng.permutation(20).tolist(), rng.permutation(20).tolist()
    assert spearman(dict(zip(STATES, x)), dict(zip(STATES, y))).coefficient == pytest.approx(spearman_d2(x, y), abs=1e-12)


@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=51, unique=True),
       st.sampled_from(["exp", "cube", "shift", "neg"]))
def test_spearman_monotone_invariance(xs, f):
    ys = [math.sin(v) + 0.01 * v for v in xs]
    if len(set(ys)) < 2:
        return
    g = {"exp": lambda v: math.exp(v / 100), "cube": lambda v: v ** 3, "shift": lambda v: 7 * v - 3, "neg": lambda v: -v}[f]
    base = spearman(dict(zip(STATES, xs)), dict(zip(STATES, ys))).coefficient
    moved = spearman(dict(zip(STATES, map(g, xs))), dict(zip(STATES, ys))).coefficient
    assert moved == pytest.approx(-base if f == "neg" else base, abs=1e-12)


def test_spearman_identity_and_reverse():
    x = dict(zip(STATES, range(51)))
    assert spearman(x, {k: v ** 3 + 2 for k, v in x.items()}).coefficient == pytest.approx(1.0)
    assert spearman(x, {k: -v for k, v in x.items()}).coefficient == pytest.approx(-1.0)


def test_permutation_pvalue():
    x = np.array([1.0, 2, 3, 4])
    y = np.array([1.0, 3, 2, 4])
    # 4! = 24 <= n_perm, so every ordering is enumerated
    observed = abs(pearson_def(list(x), list(y)))
    hits = sum(abs(pearson_def(list(x), [y[i] for i in perm])) >= observed - 1e-12 for perm in itertools.permutations(range(4)))
    assert permutation_pvalue(x, y, "pearson", n_perm=10_000) == pytest.approx(hits / 24)
    rng = np.random.Generator(np.random.PCG64(1))
    a, b = rng.normal(size=30), rng.normal(size=30)
    p1 = permutation_pvalue(a, b, "spearman", n_perm=500, seed=3)
    assert p1 == permutation_pvalue(a, b, "spearman", n_perm=500, seed=3)
    assert 0 < p1 <= 1


def test_null_calibration_independent_maps():
    rng = np.random.Generator(np.random.PCG64(77))
    flagged, small = 0, 0
    trials = 2000
    for _ in range(trials):
        res = spearman(dict(zip(STATES, rng.random(51))), dict(zip(STATES, rng.random(51))))
        flagged += res.p_value < 0.05
        small += abs(res.coefficient) < 0.5
    assert small / trials > 0.999
    assert flagged / trials == pytest.approx(0.05, abs=0.015)


def test_state_distribution_arithmetic():
    assign = {f"m{i}": ([(3, 0.5)] if i < 4 else [(5, 0.9)]) for i in range(10)}
    classes = dict.fromkeys(assign, C)
    states = dict.fromkeys(assign, "FL")
    assert state_distribution(assign, classes, states, 3) == {"FL": 0.4}
    assert state_distribution(assign, classes, states, 9) == {"FL": 0.0}
    every = {k: [(1, 1.0)] for k in assign}
    assert state_distribution(every, classes, states, 1) == {"FL": 1.0}


def test_state_distribution_ignores_promotional_and_ungeocoded():
    assign = {"a": [(1, 1.0)], "b": [(1, 1.0)], "c": [(1, 1.0)]}
    classes = {"a": C, "b": P, "c": C}
    states = {"a": "FL", "b": "FL", "c": None}
    assert state_distribution(assign, classes, states, 1) == {"FL": 1.0}


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_state_sums_equal_mean_topics_per_message(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    assign, classes, states = {}, {}, {}
    for i in range(80):
        m = f"m{i}"
        ks = sorted(set(rng.integers(0, 6, size=int(rng.integers(0, 4))).tolist()))
        assign[m] = [(k, 0.2) for k in ks]
        classes[m] = C if rng.random() < 0.7 else P
        states[m] = ["FL", "TX", "NY"][int(rng.integers(3))]
    dists = state_distributions(assign, classes, states, range(6))
    for s in ["FL", "TX", "NY"]:
        mids = [m for m in assign if classes[m] == C and states[m] == s]
        if not mids:
            continue
        direct = sum(len(assign[m]) for m in mids) / len(mids)
        assert sum(dists[k][s] for k in range(6)) == pytest.approx(direct)
        assert all(0 <= dists[k][s] <= 1 for k in range(6))


def test_keyword_matching():
    top = ["oral", "cancer", "hpv", "throat"]
    assert keyword_matches(["hpv", "oral", "cancer"], top)
    assert not keyword_matches(["hpv", "anal", "cancer"], top)
    assert not keyword_matches([], top)
    assert keyword_matches(["vaccin"], ["vaccination"])
    assert not keyword_matches(["vaccin"], ["vaccination"], prefix=False)
    assert keyword_matches(["HPV"], ["hpv"])


def test_keyword_and_group_maps():
    tw = {0: ["oral", "cancer", "hpv"], 1: ["anal", "cancer", "hpv"], 2: ["flu"]}
    qk = {"q_oral": ["hpv", "oral", "cancer"], "q_anal": ["hpv", "anal", "cancer"]}
    matches = keyword_map(tw, qk)
    assert matches == [(0, "q_oral"), (1, "q_anal")]
    groups = [QuestionGroup("QG1", [Question("q_oral", frozenset({"Yes"})), Question("q_anal", frozenset({"Yes"}))]),
              QuestionGroup("QG2", [Question("other", frozenset({"Yes"}))])]
    assert group_map(matches, groups) == {"QG1": {0, 1}, "QG2": set()}


def test_strength_bands():
    assert [strength_band(v) for v in (0.1, 0.3, 0.4, -0.6, 0.8, 0.95)] == [
        "negligible", "negligible", "low", "moderate", "high", "very high"]


def _report_inputs(seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    dists = {k: dict(zip(STATES, rng.random(51))) for k in range(4)}
    est = {"QG1": dict(dists[2]), "QG2": dict(zip(STATES, rng.random(51)))}
    groups = [QuestionGroup("QG1", [Question("a", frozenset({"Yes"}))]),
              QuestionGroup("QG2", [Question("b", frozenset({"Yes"}))])]
    return dists, est, groups


def test_correlation_report_scope_and_order():
    dists, est, groups = _report_inputs()
    rows = correlation_report(range(4), groups, dists, est, keyword_groups={"QG1": {2}}, construct_topics=[1])
    assert {(r.qg, r.topic) for r in rows} == {("QG1", 2), ("QG1", 1), ("QG2", 1)}
    top = rows[0]
    assert (top.qg, top.topic, top.coefficient, top.by_keyword) == ("QG1", 2, pytest.approx(1.0), True)
    assert [r.coefficient for r in rows] == sorted((r.coefficient for r in rows), reverse=True)
    assert all(r.significant == (r.p_value < 0.05) for r in rows)
    assert len(correlation_report(range(4), groups, dists, est, all_pairs=True)) == 8


def test_correlation_report_relabel_invariance():
    dists, est, groups = _report_inputs(3)
    perm = [2, 0, 3, 1]
    relabeled = {perm[k]: v for k, v in dists.items()}
    a = correlation_report(range(4), groups, dists, est, all_pairs=True)
    b = correlation_report(range(4), groups, relabeled, est, all_pairs=True)
    key = lambda rows, f: Counter((r.qg, f(r.topic), round(r.coefficient, 12), round(r.p_value, 12)) for r in rows)  # noqa: E731
    assert key(a, lambda k: perm[k]) == key(b, lambda k: k)


def test_monthly_correlations_rows():
    months = ["2016-01", "2016-02", "2016-03", "2016-04"]
    assign, classes, mk = {}, {}, {}
    i = 0
    for mi, m in enumerate(months):
        for cls, n in ((P, 2 * mi + 1), (C, mi + 1)):
            for _ in range(n):
                mid = f"m{i}"
                assign[mid], classes[mid], mk[mid] = [(0, 1.0)], cls, m
                i += 1
    rows = analytics.monthly_correlations(assign, classes, mk, [0])
    assert len(rows) == 1
    r = rows[0]
    assert r.coefficient == pytest.approx(1.0)
    assert r.promotional_count == 16 and r.consumer_count == 10
    assert r.promotional_pct == pytest.approx(100.0)
