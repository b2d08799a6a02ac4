"""End-to-end pipeline: ingest -> geocode -> classify -> lda -> analyze -> report.

Every stage writes into its own subdirectory of the output directory together
with a ``.stage.json`` stamp holding the cache key (a hash of the stage
parameters and the contents of its inputs) and the hashes of its outputs. A
stage whose key and outputs are unchanged is skipped. ``manifest.json``
records parameters, seeds, row counts and output hashes but no timing or
cache status, so reruns are byte-identical.
"""

from __future__ import annotations

import copy
import csv
import glob
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import yaml

from . import analytics, report
from .classify import MessageClass, classify
from .geocode import Gazetteer, resolve_with_tier
from .ingest import ConfigError, ingest, load_keywords
from .langid import TrigramDetector
from .records import MessageRecord, iter_jsonl, parse_timestamp, write_jsonl
from .survey import load_groups, load_respondents, state_estimates
from .topicmodel import (
    LdaModel,
    assign_topics,
    assignment_counts,
    build_vocabulary,
    default_topic_meta,
    excluded_topics,
    load_stopwords,
    load_topic_meta,
    select_k,
    top_words,
    train,
)
from .topicmodel.meta import read_top_words, write_top_words

logger = logging.getLogger(__name__)

STAGES = ("ingest", "geocode", "classify", "lda", "analyze", "report")

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "threads": 1,
    "inputs": {
        "records": [],
        "keywords": None,
        "gazetteer": None,
        "stopwords": None,
        "survey": [],
        "groups": None,
        "topic_meta": None,
        "geometry": None,
    },
    "geocode": {"radius_km": 100.0},
    "topicmodel": {
        "K": 150,
        "alpha": None,
        "beta": 0.01,
        "iterations": 1000,
        "cutoff": 0.15,
        "min_count": 4,
        "extra_stopwords": [],
        "geocoded_only": True,
        "select_k": [],
        "top_n": 20,
    },
    "analyze": {"normalize": False, "all_pairs": False, "alpha": 0.05, "permutations": 0, "keyword_prefix": True},
    "report": {"max_topics_per_group": 2},
}


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | Path, overrides: dict | None = None) -> dict:
    """Read the YAML config, fill defaults, resolve relative paths against the config's directory."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    cfg = _merge(_merge(DEFAULTS, raw), overrides or {})
    base = path.parent
    inp = cfg["inputs"]

    def rel(p):
        return None if p in (None, "") else str((base / p) if not Path(p).is_absolute() else Path(p))

    for key in ("keywords", "gazetteer", "stopwords", "groups", "topic_meta", "geometry"):
        inp[key] = rel(inp.get(key))
    for key in ("records", "survey"):
        v = inp.get(key) or []
        inp[key] = [rel(p) for p in ([v] if isinstance(v, str) else v)]
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    inp = cfg["inputs"]
    for key in ("records", "keywords", "gazetteer", "survey"):
        if not inp.get(key):
            raise ConfigError(f"config is missing required key inputs.{key}")


def _expand(patterns: list[str]) -> list[str]:
    out = []
    for p in patterns:
        hits = sorted(glob.glob(p))
        if not hits:
            raise FileNotFoundError(f"no files match {p}")
        out.extend(hits)
    return out


def file_hash(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _key(stage: str, params: Any, inputs: list[str]) -> str:
    h = hashlib.sha256()
    h.update(stage.encode())
    h.update(json.dumps(params, sort_keys=True, default=str).encode())
    for p in inputs:
        h.update(file_hash(p).encode())
    return h.hexdigest()


@dataclass
class StageResult:
    name: str
    key: str
    outputs: dict[str, str]
    counts: dict[str, Any]
    cached: bool = False
    params: dict = field(default_factory=dict)


def _run_stage(out: Path, name: str, params: dict, inputs: list[str], fn: Callable[[Path], dict]) -> StageResult:
    sdir = out / name
    stamp = sdir / ".stage.json"
    key = _key(name, params, inputs)
    if stamp.exists():
        prev = json.loads(stamp.read_text(encoding="utf-8"))
        if prev.get("key") == key and all(
            (sdir / f).exists() and file_hash(sdir / f) == h for f, h in prev.get("outputs", {}).items()
        ):
            logger.info("stage %s: cache hit", name)
            return StageResult(name, key, prev["outputs"], prev["counts"], True, params)
    sdir.mkdir(parents=True, exist_ok=True)
    logger.info("stage %s: running", name)
    try:
        counts = fn(sdir)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    outputs = {
        str(p.relative_to(sdir)): file_hash(p) for p in sorted(sdir.rglob("*")) if p.is_file() and p.name != ".stage.json"
    }
    stamp.write_text(json.dumps({"key": key, "outputs": outputs, "counts": counts}, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return StageResult(name, key, outputs, counts, False, params)


# ---- stage bodies ---------------------------------------------------------

def corpus_row(rec: MessageRecord, clean) -> dict:
    row = clean.to_json()
    row.update({
        "text": rec.text,
        "created_at": rec.created_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "latitude": rec.latitude,
        "longitude": rec.longitude,
        "place_name": rec.place_name,
        "user_location": rec.user_location,
    })
    return row


def row_record(row: dict) -> MessageRecord:
    return MessageRecord(
        id=row["id"],
        text=row.get("text", ""),
        created_at=parse_timestamp(row.get("created_at") or f"{row['month_key']}-01T00:00:00Z"),
        latitude=row.get("latitude"),
        longitude=row.get("longitude"),
        place_name=row.get("place_name"),
        user_location=row.get("user_location"),
        is_quote=bool(row.get("is_quote")),
        is_retweet=bool(row.get("is_retweet")),
        has_url=bool(row.get("has_url")),
        source_tag=row.get("source_tag", ""),
    )


def stage_ingest(sdir: Path, records: list[str], keywords: str) -> dict:
    patterns = load_keywords(keywords)
    recs, cleaned, rep = ingest(records, patterns, TrigramDetector())
    n = write_jsonl(sdir / "corpus.jsonl", (corpus_row(r, c) for r, c in zip(recs, cleaned)))
    summary = rep.to_json()
    summary["files"] = [dict(f, path=Path(f["path"]).name) for f in summary["files"]]
    (sdir / "report.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return {"rows": n, **{k: v for k, v in summary.items() if k != "files"}}


def stage_geocode(sdir: Path, corpus: str, gazetteer: str, radius_km: float) -> dict:
    gaz = Gazetteer.from_tsv(gazetteer)
    tiers = {"coordinates": 0, "place": 0, "user_location": 0, "unresolved": 0}
    rows = []
    for row in iter_jsonl(corpus):
        state, tier = resolve_with_tier(row_record(row), gaz, radius_km)
        row["state"] = state
        row["geo_tier"] = tier
        tiers[tier or "unresolved"] += 1
        rows.append(row)
    write_jsonl(sdir / "corpus.jsonl", rows)
    (sdir / "stats.json").write_text(json.dumps(tiers, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return {"rows": len(rows), "geocoded": len(rows) - tiers["unresolved"], **tiers}


def stage_classify(sdir: Path, corpus: str) -> dict:
    counts = {c.value: 0 for c in MessageClass}
    rows = []
    for row in iter_jsonl(corpus):
        cls = classify(row_record(row))
        row["class"] = cls.value
        counts[cls.value] += 1
        rows.append(row)
    write_jsonl(sdir / "corpus.jsonl", rows)
    return {"rows": len(rows), **counts}


def stage_lda(sdir: Path, corpus: str, stopwords: str | None, p: dict, seed: int, threads: int) -> dict:
    rows = [r for r in iter_jsonl(corpus) if r["tokens"] and (r.get("state") or not p["geocoded_only"])]
    stop = load_stopwords(stopwords, p["extra_stopwords"])
    ic = build_vocabulary([r["id"] for r in rows], [r["tokens"] for r in rows], stop, p["min_count"])
    counts: dict[str, Any] = {"documents_in_scope": len(rows), "documents_trained": len(ic.docs),
                              "documents_emptied": len(ic.dropped_ids), "vocabulary": len(ic.vocab), "tokens": ic.n_tokens}
    if p["select_k"]:
        table = select_k(ic, p["select_k"], p["alpha"], p["beta"], p["iterations"], seed, threads)
        with open(sdir / "select_k.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["K", "arun2010", "cao2009", "deveaud2014"])
            for r in table:
                w.writerow([r.K, repr(r.arun), repr(r.cao), repr(r.deveaud)])
    model = train(ic, p["K"], p["alpha"], p["beta"], p["iterations"], seed)
    model.save(sdir / "model.npz")
    assign = assign_topics(model, p["cutoff"])
    for did in ic.dropped_ids:
        assign[did] = []
    write_jsonl(sdir / "assignments.jsonl", ({"id": r["id"], "topics": assign[r["id"]]} for r in rows))
    write_top_words(sdir / "topwords.json", [top_words(model, k, p["top_n"]) for k in range(model.K)])
    assigned, unassigned = assignment_counts(assign)
    counts.update({"assigned": assigned, "unassigned": unassigned, "K": model.K, "alpha": model.alpha})
    return counts


def load_assignments(path: str | Path) -> dict[str, list[tuple[int, float]]]:
    return {r["id"]: [(int(k), float(p)) for k, p in r["topics"]] for r in iter_jsonl(path)}


def _write_csv(path: Path, rows: list[dict], fields: list[str] | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fields = fields or (list(rows[0]) if rows else [])
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


@dataclass
class AnalysisInputs:
    assignments: dict
    classes: dict
    months: dict
    states: dict
    topics: list[int]
    meta: dict
    topwords: dict

    @property
    def labels(self) -> dict[int, str]:
        return {k: m.label for k, m in self.meta.items()}

    @property
    def excluded(self) -> set[int]:
        return excluded_topics(self.meta)


def analysis_inputs(
    corpus: str | Path,
    assignments: str | Path,
    topwords: Mapping[int, list[str]],
    topic_meta: str | Path | None,
    K: int,
    geocoded_only: bool,
) -> AnalysisInputs:
    assign = load_assignments(assignments)
    classes, months, states = {}, {}, {}
    for r in iter_jsonl(corpus):
        if geocoded_only and not r.get("state"):
            continue
        classes[r["id"]] = MessageClass(r["class"])
        months[r["id"]] = r["month_key"]
        states[r["id"]] = r.get("state")
    meta = load_topic_meta(topic_meta) if topic_meta else default_topic_meta(K)
    excluded = excluded_topics(meta)
    topics = [k for k in range(K) if k not in excluded]
    return AnalysisInputs(assign, classes, months, states, topics, meta, dict(topwords))


def write_rq1(out: Path, ai: AnalysisInputs) -> dict:
    counts = {}
    for cls in MessageClass:
        shares = analytics.topic_shares(ai.assignments, ai.classes, cls, ai.excluded)
        _write_csv(out / f"rq1_{cls.value}.csv",
                   [{"rank": i + 1, "topic": k, "label": ai.labels.get(k, ""), "count": n, "percent": round(pct, 2)}
                    for i, (k, n, pct) in enumerate(shares)],
                   ["rank", "topic", "label", "count", "percent"])
        counts[f"rq1_{cls.value}_topics"] = len(shares)
    return counts


def write_rq2(out: Path, ai: AnalysisInputs, normalize: bool = False, alpha: float = 0.05) -> dict:
    monthly = analytics.monthly_correlations(ai.assignments, ai.classes, ai.months, ai.topics, normalize, ai.labels)
    rows = []
    for r in monthly:
        d = r.to_dict()
        d["significant"] = r.p_value < alpha
        rows.append(d)
    _write_csv(out / "rq2_monthly_correlations.csv", rows,
               list(analytics.MonthlyCorrelationRow.__dataclass_fields__) + ["significant"])
    return {"rq2_rows": len(rows), "rq2_significant": sum(r["significant"] for r in rows)}


def write_rq3(
    out: Path,
    ai: AnalysisInputs,
    survey: Sequence[str | Path],
    groups_path: str | Path | None,
    keyword_prefix: bool = True,
    all_pairs: bool = False,
    alpha: float = 0.05,
    permutations: int = 0,
    seed: int = 0,
) -> dict:
    respondents = []
    for s in survey:
        respondents.extend(load_respondents(s)[0])
    groups = load_groups(groups_path)
    estimates = {g.id: state_estimates(respondents, g) for g in groups}
    _write_csv(out / "rq3_estimates.csv",
               [{"qg": g, "state": s, "estimate": v} for g, est in estimates.items() for s, v in est.items()],
               ["qg", "state", "estimate"])
    dists = analytics.state_distributions(ai.assignments, ai.classes, ai.states, ai.topics)
    _write_csv(out / "rq3_state_distributions.csv",
               [{"topic": k, "state": s, "share": v} for k, d in dists.items() for s, v in d.items()],
               ["topic", "state", "share"])
    qkw = {q.id: list(q.keywords) for g in groups for q in g.questions if q.keywords}
    matches = analytics.keyword_map({k: ai.topwords[k] for k in ai.topics}, qkw, keyword_prefix)
    owner = {q.id: g.id for g in groups for q in g.questions}
    _write_csv(out / "rq3_keyword_map.csv", [{"topic": k, "question": q, "qg": owner[q]} for k, q in matches],
               ["topic", "question", "qg"])
    construct_topics = [k for k in ai.topics if ai.meta.get(k) and ai.meta[k].constructs]
    rows = analytics.correlation_report(
        ai.topics, groups, dists, estimates, analytics.group_map(matches, groups), construct_topics, all_pairs,
        alpha, ai.labels, {k: m.constructs for k, m in ai.meta.items()}, permutations, seed,
    )
    _write_csv(out / "rq3_correlations.csv", [r.to_dict() for r in rows], list(analytics.CorrelationRow.__dataclass_fields__))
    return {
        "respondents": len(respondents),
        "keyword_pairs": len(matches),
        "rq3_rows": len(rows),
        "rq3_significant": sum(r.significant for r in rows),
    }


def stage_analyze(sdir: Path, ai: AnalysisInputs, survey: list[str], groups_path: str | None, p: dict, seed: int) -> dict:
    counts = {"messages": len(ai.classes), "topics_in_scope": len(ai.topics)}
    counts.update(write_rq1(sdir, ai))
    counts.update(write_rq2(sdir, ai, p["normalize"], p["alpha"]))
    counts.update(write_rq3(sdir, ai, survey, groups_path, p["keyword_prefix"], p["all_pairs"], p["alpha"],
                            p["permutations"], seed))
    return counts


def read_topwords(path: str | Path) -> dict[int, list[str]]:
    return {k: [w for w, _ in ws] for k, ws in read_top_words(path).items()}


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def stage_report(sdir: Path, analysis_dir: Path, lda_dir: Path, geometry: str | None, p: dict) -> dict:
    geom = report.load_geometry(geometry) if geometry else _tile_geometry()
    est: dict[str, dict[str, float]] = {}
    for r in _read_csv(analysis_dir / "rq3_estimates.csv"):
        est.setdefault(r["qg"], {})[r["state"]] = float(r["estimate"])
    dist: dict[int, dict[str, float]] = {}
    for r in _read_csv(analysis_dir / "rq3_state_distributions.csv"):
        dist.setdefault(int(r["topic"]), {})[r["state"]] = float(r["share"])
    corr = _read_csv(analysis_dir / "rq3_correlations.csv")
    n_maps = 0
    for g in sorted(est):
        (sdir / f"choropleth_{g}.svg").write_text(report.render_choropleth(est[g], geom, f"{g} weighted estimate"), encoding="utf-8")
        n_maps += 1
        picks = [r for r in corr if r["qg"] == g][: p["max_topics_per_group"]]
        kw = [r for r in corr if r["qg"] == g and r["by_keyword"] == "True"][:1]
        for r in {int(x["topic"]): x for x in kw + picks}.values():
            k = int(r["topic"])
            title = f"topic {k} share of consumer messages (rho {float(r['coefficient']):.2f} vs {g})"
            (sdir / f"choropleth_{g}_topic{k}.svg").write_text(report.render_choropleth(dist.get(k, {}), geom, title), encoding="utf-8")
            n_maps += 1
    rows = []
    for k, words in sorted(read_top_words(lda_dir / "topwords.json").items()):
        for w, size in report.render_wordcloud_data(words[:10]):
            rows.append({"topic": k, "word": w, "size": size})
    _write_csv(sdir / "wordclouds.csv", rows, ["topic", "word", "size"])
    return {"choropleths": n_maps, "wordcloud_rows": len(rows)}


def _tile_geometry():
    import tempfile

    with tempfile.NamedTemporaryFile("w", suffix=".geojson", delete=False) as fh:
        json.dump(report.tile_grid_geojson(), fh)
    try:
        return report.load_geometry(fh.name)
    finally:
        Path(fh.name).unlink()


# ---- driver ---------------------------------------------------------------

def run_pipeline(config: str | Path | dict, out_dir: str | Path, seed: int | None = None, threads: int | None = None) -> dict[str, StageResult]:
    """Run all stages in order, skipping those whose inputs and parameters are unchanged."""
    cfg = load_config(config) if not isinstance(config, dict) else _merge(DEFAULTS, config)
    if isinstance(config, dict):
        validate_config(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if threads is not None:
        cfg["threads"] = threads
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inp = cfg["inputs"]
    seed_ = int(cfg["seed"])
    tm = cfg["topicmodel"]
    results: dict[str, StageResult] = {}

    records = _expand(inp["records"])
    results["ingest"] = _run_stage(out, "ingest", {}, records + [inp["keywords"]],
                                   lambda d: stage_ingest(d, records, inp["keywords"]))
    c1 = str(out / "ingest" / "corpus.jsonl")
    results["geocode"] = _run_stage(out, "geocode", cfg["geocode"], [c1, inp["gazetteer"]],
                                    lambda d: stage_geocode(d, c1, inp["gazetteer"], cfg["geocode"]["radius_km"]))
    c2 = str(out / "geocode" / "corpus.jsonl")
    results["classify"] = _run_stage(out, "classify", {}, [c2], lambda d: stage_classify(d, c2))
    c3 = str(out / "classify" / "corpus.jsonl")
    lda_inputs = [c3] + ([inp["stopwords"]] if inp["stopwords"] else [])
    results["lda"] = _run_stage(out, "lda", {"topicmodel": tm, "seed": seed_}, lda_inputs,
                                lambda d: stage_lda(d, c3, inp["stopwords"], tm, seed_, int(cfg["threads"])))
    lda_dir = out / "lda"
    survey = _expand(inp["survey"])
    an_inputs = [c3, str(lda_dir / "assignments.jsonl"), str(lda_dir / "topwords.json"), *survey]
    an_inputs += [x for x in (inp["groups"], inp["topic_meta"]) if x]
    K = results["lda"].counts["K"]
    results["analyze"] = _run_stage(
        out, "analyze", {"analyze": cfg["analyze"], "seed": seed_, "geocoded_only": tm["geocoded_only"]}, an_inputs,
        lambda d: stage_analyze(
            d,
            analysis_inputs(c3, lda_dir / "assignments.jsonl", read_topwords(lda_dir / "topwords.json"), inp["topic_meta"], K, tm["geocoded_only"]),
            survey, inp["groups"], cfg["analyze"], seed_,
        ),
    )
    an_dir = out / "analyze"
    rep_inputs = [str(an_dir / f) for f in ("rq3_estimates.csv", "rq3_state_distributions.csv", "rq3_correlations.csv")]
    rep_inputs += [str(lda_dir / "topwords.json")] + ([inp["geometry"]] if inp["geometry"] else [])
    results["report"] = _run_stage(out, "report", cfg["report"], rep_inputs,
                                   lambda d: stage_report(d, an_dir, lda_dir, inp["geometry"], cfg["report"]))

    manifest = {
        "seed": seed_,
        "config": {k: v for k, v in cfg.items() if k not in ("inputs", "threads")},
        "inputs": {p: file_hash(p) for p in sorted(set(records + survey + [x for x in inp.values() if isinstance(x, str)]))},
        "stages": {
            name: {"key": r.key, "counts": r.counts, "outputs": r.outputs} for name, r in results.items()
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1, default=str) + "\n", encoding="utf-8")
    return results
