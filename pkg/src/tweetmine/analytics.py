"""Topic rankings, monthly Pearson correlations, state distributions and Spearman comparisons."""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .classify import MessageClass
from .survey import QuestionGroup

logger = logging.getLogger(__name__)

Assignments = Mapping[str, Sequence[tuple[int, float]]]


class UndefinedCorrelation(ValueError):
    """A series is constant, so the correlation coefficient is undefined."""


class InsufficientData(ValueError):
    """Fewer than three paired observations."""


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    n: int
    method: str


def _topics_of(assignments: Assignments, mid: str) -> set[int]:
    return {k for k, _ in assignments.get(mid, ())}


def share_percent(count: int, total: int) -> float:
    return round(100.0 * count / total, 2)


def topic_shares(
    assignments: Assignments,
    classes: Mapping[str, MessageClass],
    class_filter: MessageClass,
    excluded: Iterable[int] = (),
) -> list[tuple[int, int, float]]:
    """Per-topic message counts and percentages within one class, largest first.

    The denominator is every message of the class, assigned or not. A message
    contributes once to each topic it carries.
    """
    skip = set(excluded)
    ids = [m for m, c in classes.items() if c == class_filter]
    total = len(ids)
    counts: Counter = Counter()
    for m in ids:
        for k in _topics_of(assignments, m):
            if k not in skip:
                counts[k] += 1
    if total == 0:
        return []
    rows = [(k, n, 100.0 * n / total) for k, n in counts.items()]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def month_range(first: str, last: str) -> list[str]:
    y, m = map(int, first.split("-"))
    y2, m2 = map(int, last.split("-"))
    out = []
    while (y, m) <= (y2, m2):
        out.append(f"{y:04d}-{m:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def monthly_series(
    assignments: Assignments,
    classes: Mapping[str, MessageClass],
    months: Mapping[str, str],
    topic: int,
    cls: MessageClass,
) -> dict[str, int]:
    """Monthly counts of class-``cls`` messages carrying ``topic``, zero-filled over the corpus range."""
    if not months:
        return {}
    keys = month_range(min(months.values()), max(months.values()))
    out = dict.fromkeys(keys, 0)
    for m, c in classes.items():
        if c == cls and topic in _topics_of(assignments, m):
            out[months[m]] += 1
    return out


def _t_pvalue(r: float, n: int) -> float:
    if n < 3:
        return math.nan
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(min(1.0, 2.0 * stats.t.sf(abs(t), n - 2)))


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("correlation undefined for a constant series")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series lengths differ")
    if len(x) < 3:
        raise InsufficientData("need at least 3 observations")
    r = _pearson_r(x, y)
    return CorrelationResult(r, _t_pvalue(r, len(x)), len(x), "pearson")


def _paired(x: Mapping[str, float], y: Mapping[str, float]) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(set(x) & set(y))
    if len(keys) < 3:
        raise InsufficientData(f"only {len(keys)} shared keys")
    return np.array([x[k] for k in keys], float), np.array([y[k] for k in keys], float)


def spearman(x: Mapping[str, float], y: Mapping[str, float]) -> CorrelationResult:
    """Rank correlation over the keys present in both maps (ties get mean rank)."""
    xa, ya = _paired(x, y)
    r = _pearson_r(stats.rankdata(xa), stats.rankdata(ya))
    return CorrelationResult(r, _t_pvalue(r, len(xa)), len(xa), "spearman")


def permutation_pvalue(
    x: Sequence[float], y: Sequence[float], method: str = "spearman", n_perm: int = 10_000, seed: int = 0
) -> float:
    """Two-sided permutation p-value; exhaustive when n! <= ``n_perm``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if method == "spearman":
        x, y = stats.rankdata(x), stats.rankdata(y)
    observed = abs(_pearson_r(x, y))
    n = len(x)
    tol = 1e-12
    if math.factorial(n) <= n_perm:
        hits = total = 0
        for perm in itertools.permutations(range(n)):
            total += 1
            if abs(_pearson_r(x, y[list(perm)])) >= observed - tol:
                hits += 1
        return hits / total
    rng = np.random.Generator(np.random.PCG64(seed))
    hits = 0
    for _ in range(n_perm):
        if abs(_pearson_r(x, rng.permutation(y))) >= observed - tol:
            hits += 1
    return (hits + 1) / (n_perm + 1)


def state_distribution(
    assignments: Assignments,
    classes: Mapping[str, MessageClass],
    states: Mapping[str, str | None],
    topic: int,
) -> dict[str, float]:
    """Share of each state's consumer messages that carry ``topic``."""
    return state_distributions(assignments, classes, states, [topic])[topic]


def _consumer_by_state(classes, states) -> dict[str, list[str]]:
    by_state: dict[str, list[str]] = defaultdict(list)
    for m, c in classes.items():
        s = states.get(m)
        if c == MessageClass.CONSUMER and s:
            by_state[s].append(m)
    return by_state


def state_distributions(
    assignments: Assignments,
    classes: Mapping[str, MessageClass],
    states: Mapping[str, str | None],
    topics: Iterable[int] | None = None,
) -> dict[int, dict[str, float]]:
    """Share of each state's consumer messages that carry each topic.

    States with no consumer messages are absent; a topic absent from a state
    gets 0.0 there.
    """
    by_state = _consumer_by_state(classes, states)
    counts: dict[int, Counter] = defaultdict(Counter)
    for s, mids in by_state.items():
        for m in mids:
            for k in _topics_of(assignments, m):
                counts[k][s] += 1
    wanted = sorted(counts) if topics is None else list(topics)
    return {k: {s: counts[k][s] / len(by_state[s]) for s in sorted(by_state)} for k in wanted}


def keyword_matches(keywords: Iterable[str], words: Iterable[str], prefix: bool = True) -> bool:
    """Every keyword appears among ``words`` (exactly, or as a prefix when ``prefix``)."""
    kws = [k.casefold().rstrip("*") for k in keywords]
    if not kws:
        return False
    ws = [w.casefold() for w in words]
    for k in kws:
        if not any(w == k or (prefix and w.startswith(k)) for w in ws):
            return False
    return True


def keyword_map(
    topic_top_words: Mapping[int, Sequence[str]],
    question_keywords: Mapping[str, Sequence[str]],
    prefix: bool = True,
) -> list[tuple[int, str]]:
    """(topic, question) pairs where all of the question's keywords are in the topic's top words."""
    out = []
    for k in sorted(topic_top_words):
        for q in sorted(question_keywords):
            if keyword_matches(question_keywords[q], topic_top_words[k], prefix):
                out.append((k, q))
    return out


def group_map(matches: Iterable[tuple[int, str]], groups: Sequence[QuestionGroup]) -> dict[str, set[int]]:
    """A topic maps to a group when it maps to any question of the group."""
    owner = {q.id: g.id for g in groups for q in g.questions}
    out: dict[str, set[int]] = {g.id: set() for g in groups}
    for k, q in matches:
        if q in owner:
            out[owner[q]].add(k)
    return out


def strength_band(rho: float) -> str:
    a = abs(rho)
    if a <= 0.3:
        return "negligible"
    if a <= 0.5:
        return "low"
    if a <= 0.7:
        return "moderate"
    if a <= 0.9:
        return "high"
    return "very high"


@dataclass
class CorrelationRow:
    qg: str
    topic: int
    coefficient: float
    p_value: float
    n: int
    significant: bool
    by_keyword: bool
    by_construct: bool
    band: str
    qg_construct: str = ""
    topic_label: str = ""
    topic_constructs: str = ""
    permutation_p: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def correlation_report(
    topics: Iterable[int],
    groups: Sequence[QuestionGroup],
    state_dists: Mapping[int, Mapping[str, float]],
    estimates: Mapping[str, Mapping[str, float]],
    keyword_groups: Mapping[str, set[int]] | None = None,
    construct_topics: Iterable[int] = (),
    all_pairs: bool = False,
    alpha: float = 0.05,
    labels: Mapping[int, str] | None = None,
    topic_constructs: Mapping[int, Sequence[str]] | None = None,
    permutations: int = 0,
    seed: int = 0,
) -> list[CorrelationRow]:
    """Spearman rows for every (topic, question group) pair in scope.

    A pair is in scope when the topic is keyword-mapped to the group, when the
    topic carries a construct tag (paired with every group), or always with
    ``all_pairs``. Rows are sorted by coefficient, largest first.
    """
    keyword_groups = keyword_groups or {}
    construct_set = set(construct_topics)
    labels = labels or {}
    topic_constructs = topic_constructs or {}
    rows = []
    for g in groups:
        est = estimates.get(g.id, {})
        kw = keyword_groups.get(g.id, set())
        for k in sorted(set(topics)):
            by_kw, by_con = k in kw, k in construct_set
            if not (by_kw or by_con or all_pairs):
                continue
            dist = state_dists.get(k)
            if dist is None:
                continue
            try:
                res = spearman(dist, est)
            except (InsufficientData, UndefinedCorrelation) as exc:
                logger.info("skipping topic %d vs %s: %s", k, g.id, exc)
                continue
            perm_p = None
            if permutations:
                xa, ya = _paired(dist, est)
                perm_p = permutation_pvalue(xa, ya, "spearman", permutations, seed)
            rows.append(CorrelationRow(
                qg=g.id,
                topic=k,
                coefficient=res.coefficient,
                p_value=res.p_value,
                n=res.n,
                significant=res.p_value < alpha,
                by_keyword=by_kw,
                by_construct=by_con,
                band=strength_band(res.coefficient),
                qg_construct=g.construct,
                topic_label=labels.get(k, ""),
                topic_constructs=";".join(topic_constructs.get(k, ())),
                permutation_p=perm_p,
            ))
    rows.sort(key=lambda r: (-r.coefficient, r.qg, r.topic))
    return rows


@dataclass
class MonthlyCorrelationRow:
    topic: int
    coefficient: float
    p_value: float
    n_months: int
    promotional_count: int
    promotional_pct: float
    consumer_count: int
    consumer_pct: float
    topic_label: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def monthly_correlations(
    assignments: Assignments,
    classes: Mapping[str, MessageClass],
    months: Mapping[str, str],
    topics: Iterable[int],
    normalize: bool = False,
    labels: Mapping[int, str] | None = None,
) -> list[MonthlyCorrelationRow]:
    """Pearson correlation of promotional vs. consumer monthly volume for each topic.

    With ``normalize`` each month's count is divided by that month's class total.
    Topics with a constant series are skipped. Sorted by coefficient, largest first.
    """
    labels = labels or {}
    n_promo = sum(1 for c in classes.values() if c == MessageClass.PROMOTIONAL)
    n_cons = len(classes) - n_promo
    totals = {}
    if normalize:
        for cls in MessageClass:
            tot = Counter(months[m] for m, c in classes.items() if c == cls)
            totals[cls] = tot
    rows = []
    for k in sorted(set(topics)):
        sp = monthly_series(assignments, classes, months, k, MessageClass.PROMOTIONAL)
        sc = monthly_series(assignments, classes, months, k, MessageClass.CONSUMER)
        xs, ys = list(sp.values()), list(sc.values())
        if normalize:
            xs = [v / totals[MessageClass.PROMOTIONAL][m] if totals[MessageClass.PROMOTIONAL][m] else 0.0 for m, v in sp.items()]
            ys = [v / totals[MessageClass.CONSUMER][m] if totals[MessageClass.CONSUMER][m] else 0.0 for m, v in sc.items()]
        try:
            res = pearson(xs, ys)
        except (InsufficientData, UndefinedCorrelation) as exc:
            logger.info("skipping topic %d: %s", k, exc)
            continue
        cp, cc = sum(sp.values()), sum(sc.values())
        rows.append(MonthlyCorrelationRow(
            topic=k,
            coefficient=res.coefficient,
            p_value=res.p_value,
            n_months=res.n,
            promotional_count=cp,
            promotional_pct=100.0 * cp / n_promo if n_promo else 0.0,
            consumer_count=cc,
            consumer_pct=100.0 * cc / n_cons if n_cons else 0.0,
            topic_label=labels.get(k, ""),
        ))
    rows.sort(key=lambda r: (-r.coefficient, r.topic))
    return rows
