"""Synthetic corpora and surveys with planted ground truth.

Documents follow the LDA generative process. Each document's topic prior is
scaled per state (for the "geo" topics) and per month, so that state-level
topic prevalence and monthly volumes carry known structure. Class flags are
drawn so the promotional/consumer rule tree reproduces a chosen mix.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import yaml
from scipy import stats

from .classify import MessageClass, classify_flags
from .geocode import STATE_NAME_OF, Gazetteer
from .records import format_timestamp, write_jsonl
from .survey import Question, QuestionGroup, SurveyRespondent, groups_to_dict, write_respondents

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

# (has_url, is_quote, is_retweet) combinations per class with their weights
PROMOTIONAL_FLAGS = {(True, False, False): 0.6, (True, False, True): 0.25, (True, True, True): 0.15}
CONSUMER_FLAGS = {(False, False, False): 0.55, (False, False, True): 0.2, (False, True, False): 0.05, (True, True, False): 0.2}

_OTHER_LANG_TEXT = [
    ("es", "la vacuna contra el virus del papiloma humano es segura y eficaz #hpv"),
    ("es", "mi hija recibió hoy la segunda dosis de la vacuna contra el hpv"),
    ("fr", "le vaccin contre le papillomavirus protège les jeunes filles #hpv"),
    ("pt", "a vacina contra o hpv está disponível nos postos de saúde"),
    ("de", "die impfung gegen hpv schützt vor gebärmutterhalskrebs"),
]


def pseudo_word(i: int) -> str:
    """Deterministic pronounceable token for vocabulary index ``i`` (three syllables)."""
    n_syl = len(_CONSONANTS) * len(_VOWELS)
    parts = []
    for _ in range(3):
        i, r = divmod(i, n_syl)
        parts.append(_CONSONANTS[r // len(_VOWELS)] + _VOWELS[r % len(_VOWELS)])
    return "".join(parts)


@dataclass
class SynthSpec:
    K: int = 10
    V: int = 500
    D: int = 10_000
    mean_doc_length: float = 15.0
    min_doc_length: int = 3
    alpha: float = 0.1
    topic_concentration: float = 1.0
    topic_leak: float = 0.02
    promotional_share: float = 0.72
    geo_topics: list[int] = field(default_factory=lambda: [0])
    geo_spread: float = 2.5
    temporal_spread: float = 0.7
    state_weights: dict[str, float] | None = None
    unresolvable_share: float = 0.05
    tier_mix: dict[str, float] = field(default_factory=lambda: {"coordinates": 0.1, "place": 0.2, "user_location": 0.7})
    non_english_share: float = 0.02
    duplicate_share: float = 0.05
    n_sources: int = 2
    start_month: str = "2016-01"
    n_months: int = 28
    keyword: str = "hpv"
    seed: int = 0

    @classmethod
    def from_yaml(cls, path: str | Path) -> "SynthSpec":
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GroundTruth:
    phi: np.ndarray
    words: list[str]
    geo_multiplier: dict[str, np.ndarray]
    month_multiplier: np.ndarray
    months: list[str]
    message_class: dict[str, str]
    message_state: dict[str, str]
    message_resolvable: dict[str, bool]
    spec: SynthSpec
    seed: int

    def state_prevalence(self, topic: int) -> dict[str, float]:
        """Expected share of ``topic`` in a document's topic mixture, per state (averaged over months)."""
        out = {}
        for s, g in sorted(self.geo_multiplier.items()):
            a = self.spec.alpha * g[None, :] * self.month_multiplier
            out[s] = float(np.mean(a[:, topic] / a.sum(axis=1)))
        return out

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        order = np.lexsort((np.arange(self.phi.shape[1]), -self.phi[topic]))[:n]
        return [self.words[i] for i in order]

    def save(self, directory: str | Path) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        np.save(d / "truth_phi.npy", self.phi)
        meta = {
            "words": self.words,
            "geo_multiplier": {s: v.tolist() for s, v in self.geo_multiplier.items()},
            "month_multiplier": self.month_multiplier.tolist(),
            "months": self.months,
            "message_class": self.message_class,
            "message_state": self.message_state,
            "message_resolvable": self.message_resolvable,
            "spec": self.spec.to_dict(),
            "seed": self.seed,
        }
        (d / "truth.json").write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "GroundTruth":
        d = Path(directory)
        meta = json.loads((d / "truth.json").read_text(encoding="utf-8"))
        return cls(
            phi=np.load(d / "truth_phi.npy"),
            words=meta["words"],
            geo_multiplier={s: np.asarray(v) for s, v in meta["geo_multiplier"].items()},
            month_multiplier=np.asarray(meta["month_multiplier"]),
            months=meta["months"],
            message_class=meta["message_class"],
            message_state=meta["message_state"],
            message_resolvable=meta["message_resolvable"],
            spec=SynthSpec(**meta["spec"]),
            seed=meta["seed"],
        )


def planted_phi(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Block-structured topics: each topic owns a contiguous vocabulary block plus a small uniform leak."""
    K, V = spec.K, spec.V
    phi = np.full((K, V), spec.topic_leak / V)
    edges = np.linspace(0, V, K + 1).astype(int)
    for k in range(K):
        lo, hi = edges[k], edges[k + 1]
        if K == 1:
            lo, hi = 0, V
        block = rng.dirichlet(np.full(hi - lo, spec.topic_concentration))
        phi[k, lo:hi] += (1.0 - spec.topic_leak) * block
    return phi / phi.sum(axis=1, keepdims=True)


def _choice_weighted(rng, table: dict):
    keys = list(table)
    p = np.array([table[k] for k in keys], float)
    return keys[rng.choice(len(keys), p=p / p.sum())]


def _month_list(start: str, n: int) -> list[str]:
    y, m = map(int, start.split("-"))
    out = []
    for _ in range(n):
        out.append(f"{y:04d}-{m:02d}")
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def _location_fields(rng, tier: str, state: str, places_by_state: dict, state_names: dict) -> dict:
    places = places_by_state[state]
    place = places[rng.integers(len(places))]
    if tier == "coordinates":
        return {
            "latitude": round(place.latitude + rng.uniform(-0.01, 0.01), 5),
            "longitude": round(place.longitude + rng.uniform(-0.01, 0.01), 5),
        }
    style = rng.integers(3)
    if style == 0:
        text = f"{place.name.title()}, {state}"
    elif style == 1:
        text = f"{place.name.title()}, {state_names[state].title()}"
    else:
        text = state_names[state].title()
    return {"place_name": text} if tier == "place" else {"user_location": text}


def generate_corpus(spec: SynthSpec, gazetteer: Gazetteer | None = None) -> tuple[list[list[dict]], GroundTruth]:
    """Generate record rows (one list per source file) and their ground truth."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    gaz = gazetteer or Gazetteer.from_tsv()
    phi = planted_phi(spec, rng)
    words = [pseudo_word(i) for i in range(spec.V)]
    months = _month_list(spec.start_month, spec.n_months)

    places_by_state: dict = {}
    for p in gaz.entries:
        places_by_state.setdefault(p.state, []).append(p)
    states = sorted(places_by_state)
    if spec.state_weights:
        sw = np.array([spec.state_weights.get(s, 0.0) for s in states], float)
    else:
        sw = np.ones(len(states))
    sw = sw / sw.sum()

    geo = {}
    for s in states:
        g = np.ones(spec.K)
        for t in spec.geo_topics:
            g[t] = math.exp(rng.uniform(-spec.geo_spread, spec.geo_spread))
        geo[s] = g
    month_mult = np.exp(rng.uniform(-spec.temporal_spread, spec.temporal_spread, size=(len(months), spec.K)))

    cum_phi = np.cumsum(phi, axis=1)
    rows, msg_class, msg_state, resolvable = [], {}, {}, {}
    t0 = datetime(1970, 1, 1, tzinfo=timezone.utc)
    for i in range(spec.D):
        mid = f"s{spec.seed}-{i:07d}"
        state = states[rng.choice(len(states), p=sw)]
        mi = int(rng.integers(len(months)))
        a = spec.alpha * geo[state] * month_mult[mi]
        theta = rng.dirichlet(a)
        length = max(spec.min_doc_length, int(rng.poisson(spec.mean_doc_length)))
        z = rng.choice(spec.K, size=length, p=theta)
        u = rng.random(length)
        toks = [words[min(int(np.searchsorted(cum_phi[k], x, side="right")), spec.V - 1)] for k, x in zip(z, u)]
        toks.insert(int(rng.integers(len(toks) + 1)), "#" + spec.keyword)

        promo = rng.random() < spec.promotional_share
        has_url, is_quote, is_rt = _choice_weighted(rng, PROMOTIONAL_FLAGS if promo else CONSUMER_FLAGS)
        cls = classify_flags(has_url, is_quote, is_rt)
        text = " ".join(toks)
        if rng.random() < 0.2:
            text = f"@user{int(rng.integers(1000))} " + text
        rt_flag = False
        if is_rt:
            # half the retweets are only marked in the text
            rt_flag = bool(rng.random() < 0.5)
            text = f"RT @user{int(rng.integers(1000))}: " + text
        if has_url:
            text += f" https://t.co/{int(rng.integers(16**6)):06x}"

        y, m = map(int, months[mi].split("-"))
        start = datetime(y, m, 1, tzinfo=timezone.utc)
        created = start + timedelta(seconds=int(rng.integers(0, 27 * 86400)))
        row = {
            "id": mid,
            "text": text,
            "created_at": format_timestamp(created),
            "lang": "en",
            "is_quote": bool(is_quote),
            "is_retweet": rt_flag,
        }
        if rng.random() < spec.unresolvable_share:
            if rng.random() < 0.5:
                row["user_location"] = "somewhere on earth"
            resolvable[mid] = False
        else:
            tier = _choice_weighted(rng, spec.tier_mix)
            row.update(_location_fields(rng, tier, state, places_by_state, STATE_NAME_OF))
            resolvable[mid] = True
        rows.append(row)
        msg_class[mid] = cls.value
        msg_state[mid] = state

    n_other = int(round(spec.non_english_share * spec.D))
    for j in range(n_other):
        lang, text = _OTHER_LANG_TEXT[j % len(_OTHER_LANG_TEXT)]
        row = {"id": f"s{spec.seed}-x{j:06d}", "text": text, "created_at": f"{months[j % len(months)]}-15T12:00:00Z"}
        if j % 2 == 0:
            row["lang"] = lang
        rows.append(row)

    n_src = max(1, spec.n_sources)
    sources: list[list[dict]] = [[] for _ in range(n_src)]
    for row in rows:
        src = int(rng.integers(n_src))
        sources[src].append(dict(row, source_tag=f"source{src}"))
        if n_src > 1 and rng.random() < spec.duplicate_share:
            other = (src + 1 + int(rng.integers(n_src - 1))) % n_src
            sources[other].append(dict(row, source_tag=f"source{other}"))

    truth = GroundTruth(phi, words, geo, month_mult, months, msg_class, msg_state, resolvable, spec, spec.seed)
    return sources, truth


def write_corpus(spec: SynthSpec, out_dir: str | Path, gazetteer: Gazetteer | None = None) -> GroundTruth:
    """Write ``source*.jsonl``, ``keywords.txt``, the generator settings and ground truth into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sources, truth = generate_corpus(spec, gazetteer)
    for i, rows in enumerate(sources):
        write_jsonl(out / f"source{i}.jsonl", rows)
    (out / "keywords.txt").write_text(spec.keyword + "\n", encoding="utf-8")
    (out / "synth_spec.yaml").write_text(yaml.safe_dump(spec.to_dict(), sort_keys=True), encoding="utf-8")
    truth.save(out)
    return truth


def _spearman_r(x, y) -> float:
    return float(stats.spearmanr(x, y).statistic)


def calibrate_noise(base: np.ndarray, noise: np.ndarray, target: float, iters: int = 60) -> tuple[float, float]:
    """Find sigma so that spearman(base, base + sigma * noise) is closest to ``target`` (> 0)."""
    lo, hi = 0.0, 1.0
    while _spearman_r(base, base + hi * noise) > target and hi < 1e6:
        hi *= 2
    best = (abs(_spearman_r(base, base + hi * noise) - target), hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        r = _spearman_r(base, base + mid * noise)
        best = min(best, (abs(r - target), mid))
        if r > target:
            lo = mid
        else:
            hi = mid
    sigma = best[1]
    return sigma, _spearman_r(base, base + sigma * noise)


@dataclass
class PlantedSurvey:
    respondents: list[SurveyRespondent]
    group: QuestionGroup
    estimates: dict[str, float]
    prevalence: dict[str, float]
    target_rho: float
    achieved_rho: float
    sigma: float | None


def plant_geo_correlation(
    truth: GroundTruth,
    qg_id: str = "QG1",
    target_rho: float = 0.9,
    seed: int = 0,
    topic: int | None = None,
    sigma: float | None = None,
    respondents_per_state: int = 120,
    n_keywords: int = 3,
) -> PlantedSurvey:
    """Synthesize respondents whose weighted state estimates rank-correlate with true topic prevalence.

    Estimates are a Gaussian-perturbed rank score of the topic's true
    per-state prevalence, with the noise level chosen (unless ``sigma`` is
    given) so the realized rank correlation is as close as possible to
    ``target_rho``. ``target_rho == 0`` draws estimates independently.
    Respondent weights within a state are rescaled so the weighted estimate
    hits the planned value exactly.
    """
    if abs(target_rho) > 0.95:
        raise ValueError("|target_rho| must be <= 0.95")
    topic = truth.spec.geo_topics[0] if topic is None else topic
    populated = sorted(set(truth.message_state.values()))
    if len(populated) < 20:
        raise ValueError(f"need >= 20 states with messages, have {len(populated)}")
    prev_all = truth.state_prevalence(topic)
    prev = np.array([prev_all[s] for s in populated])
    rng = np.random.Generator(np.random.PCG64([seed, 7919]))

    n = len(populated)
    if target_rho == 0 and sigma is None:
        score = rng.random(n)
        used_sigma = None
    else:
        base = stats.rankdata(prev) / n
        if target_rho < 0:
            base = -base
        noise = rng.standard_normal(n)
        if sigma is None:
            used_sigma, _ = calibrate_noise(base, noise, abs(target_rho))
        else:
            used_sigma = sigma
        score = base + used_sigma * noise
    ranks = stats.rankdata(score)
    planned = 0.1 + 0.8 * (ranks - 1) / max(1, n - 1)
    achieved = _spearman_r(prev, planned)

    q = Question(f"{qg_id.lower()}_planted", frozenset({"Yes"}), tuple(truth.top_words(topic, n_keywords)), "planted question")
    group = QuestionGroup(qg_id, [q], construct="knowledge", label="planted group")
    respondents = []
    for s, p in zip(populated, planned):
        m = respondents_per_state
        n_yes = int(round(p * m))
        n_yes = min(max(n_yes, 1), m - 1)
        w = rng.lognormal(0.0, 0.5, size=m)
        yes = np.zeros(m, bool)
        yes[rng.choice(m, size=n_yes, replace=False)] = True
        # rescale the "yes" weights so the weighted share equals p exactly
        w[yes] *= (p / (1 - p)) * w[~yes].sum() / w[yes].sum()
        for j in range(m):
            respondents.append(SurveyRespondent(f"{s}-{j:04d}", s, float(w[j]), {q.id: "Yes" if yes[j] else "No"}))
    estimates = dict(zip(populated, (float(v) for v in planned)))
    return PlantedSurvey(respondents, group, estimates, dict(zip(populated, prev.tolist())), target_rho, achieved, used_sigma)


def write_planted_survey(planted: PlantedSurvey, csv_path: str | Path, groups_path: str | Path | None = None) -> None:
    write_respondents(csv_path, planted.respondents, planted.group.question_ids)
    if groups_path is not None:
        Path(groups_path).write_text(yaml.safe_dump(groups_to_dict([planted.group]), sort_keys=False), encoding="utf-8")


def true_class(truth: GroundTruth, mid: str) -> MessageClass:
    return MessageClass(truth.message_class[mid])
