"""Command-line entry point: one subcommand per stage plus ``pipeline run``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import yaml

from . import pipeline, report
from .classify import classify, evaluate, load_annotations
from .geocode import Gazetteer, resolve_with_tier
from .ingest import ConfigError, ingest, load_keywords
from .langid import TrigramDetector
from .records import iter_jsonl, write_jsonl
from .survey import load_groups, load_respondents, state_estimates
from .synth import GroundTruth, SynthSpec, plant_geo_correlation, write_corpus, write_planted_survey
from .topicmodel import (
    LdaModel,
    assign_topics,
    build_vocabulary,
    calibration_sample,
    calibration_score,
    load_stopwords,
    select_k,
    top_words,
    train,
)
from .topicmodel.assign import read_sheet, write_sheet
from .topicmodel.meta import write_top_words

logger = logging.getLogger("tweetmine")


def _dump(obj) -> None:
    print(json.dumps(obj, sort_keys=True, indent=1))


# ---- ingest / geocode / classify -----------------------------------------

def cmd_ingest(a) -> int:
    paths = pipeline._expand(a.input)
    recs, cleaned, rep = ingest(paths, load_keywords(a.keywords), TrigramDetector(max_distance=a.max_distance))
    write_jsonl(a.out, (pipeline.corpus_row(r, c) for r, c in zip(recs, cleaned)))
    summary = rep.to_json()
    if a.report:
        Path(a.report).write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    else:
        _dump(summary)
    return 0


def cmd_geocode(a) -> int:
    gaz = Gazetteer.from_tsv(a.gazetteer)
    tiers = {"coordinates": 0, "place": 0, "user_location": 0, "unresolved": 0}
    rows = []
    for row in iter_jsonl(a.corpus):
        state, tier = resolve_with_tier(pipeline.row_record(row), gaz, a.radius_km)
        row["state"], row["geo_tier"] = state, tier
        tiers[tier or "unresolved"] += 1
        rows.append(row)
    write_jsonl(a.out, rows)
    if a.stats:
        _dump(tiers)
    return 0


def cmd_classify(a) -> int:
    if a.action == "eval":
        if not a.gold:
            raise SystemExit("classify eval requires --gold")
        preds = {r["id"]: classify(pipeline.row_record(r)) for r in iter_jsonl(a.corpus)}
        gold = load_annotations(a.gold)
        res = evaluate(preds, gold)
        for name, m in res.items():
            p, r, f = m.as_percent()
            print(f"{name}\tprecision={p:.2f}%\trecall={r:.2f}%\tF={f:.2f}%")
        return 0
    if not a.out:
        raise SystemExit("classify requires --out")
    rows = []
    for row in iter_jsonl(a.corpus):
        row["class"] = classify(pipeline.row_record(row)).value
        rows.append(row)
    write_jsonl(a.out, rows)
    return 0


# ---- lda -------------------------------------------------------------------

def _indexed(a):
    rows = [r for r in iter_jsonl(a.corpus) if r["tokens"] and (r.get("state") or not a.geocoded_only)]
    stop = load_stopwords(a.stopwords, a.extra_stopwords)
    return build_vocabulary([r["id"] for r in rows], [r["tokens"] for r in rows], stop, a.min_count)


def cmd_lda_train(a) -> int:
    model = train(_indexed(a), a.K, a.alpha, a.beta, a.iterations, a.seed)
    model.save(a.out)
    return 0


def cmd_lda_select_k(a) -> int:
    table = select_k(_indexed(a), a.k, a.alpha, a.beta, a.iterations, a.seed, a.threads)
    with open(a.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["K", "arun2010", "cao2009", "deveaud2014"])
        for r in table:
            w.writerow([r.K, repr(r.arun), repr(r.cao), repr(r.deveaud)])
    return 0


def cmd_lda_assign(a) -> int:
    model = LdaModel.load(a.model)
    assign = assign_topics(model, a.cutoff)
    write_jsonl(a.out, ({"id": d, "topics": assign[d]} for d in model.doc_ids))
    return 0


def cmd_lda_topwords(a) -> int:
    model = LdaModel.load(a.model)
    write_top_words(a.out, [top_words(model, k, a.n) for k in range(model.K)])
    return 0


def cmd_lda_calibrate(a) -> int:
    if a.sheet:
        adequacy, chosen = calibration_score(read_sheet(a.sheet), a.threshold)
        _dump({"adequacy": {str(c): v for c, v in sorted(adequacy.items())}, "selected_cutoff": chosen})
        return 0
    if not (a.model and a.corpus and a.out):
        raise SystemExit("lda calibrate needs --sheet, or --model, --corpus and --out")
    model = LdaModel.load(a.model)
    texts = {r["id"]: r.get("text", " ".join(r["tokens"])) for r in iter_jsonl(a.corpus)}
    write_sheet(a.out, calibration_sample(model, texts, a.cutoffs, a.n, a.seed))
    return 0


# ---- survey / analyze -----------------------------------------------------

def cmd_survey_estimates(a) -> int:
    respondents = []
    for p in a.respondents:
        respondents.extend(load_respondents(p)[0])
    rows = [{"qg": g.id, "state": s, "estimate": v} for g in load_groups(a.groups) for s, v in state_estimates(respondents, g).items()]
    pipeline._write_csv(Path(a.out), rows, ["qg", "state", "estimate"])
    return 0


def cmd_analyze(a) -> int:
    model = LdaModel.load(a.model)
    tw = {k: [w for w, _ in top_words(model, k, a.top_n)] for k in range(model.K)}
    ai = pipeline.analysis_inputs(a.corpus, a.assignments, tw, a.meta, model.K, a.geocoded_only)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.question == "rq1":
        counts = pipeline.write_rq1(out, ai)
    elif a.question == "rq2":
        counts = pipeline.write_rq2(out, ai, a.normalize, a.alpha)
    else:
        if not a.survey:
            raise SystemExit("analyze rq3 requires --survey")
        counts = pipeline.write_rq3(out, ai, a.survey, a.groups, not a.exact_keywords, a.all_pairs, a.alpha,
                                    a.permutations, a.seed)
    _dump(counts)
    return 0


# ---- synth -----------------------------------------------------------------

def cmd_synth_corpus(a) -> int:
    spec = SynthSpec.from_yaml(a.spec) if a.spec else SynthSpec()
    if a.seed is not None:
        spec.seed = a.seed
    write_corpus(spec, a.out)
    return 0


def cmd_synth_survey(a) -> int:
    truth_dir = Path(a.truth)
    truth = GroundTruth.load(truth_dir if truth_dir.is_dir() else truth_dir.parent)
    planted = plant_geo_correlation(truth, a.qg, a.target_rho, a.seed, a.topic, a.sigma)
    groups_out = a.groups_out or str(Path(a.out).with_suffix(".groups.yaml"))
    write_planted_survey(planted, a.out, groups_out)
    _dump({"target_rho": planted.target_rho, "achieved_rho": planted.achieved_rho, "sigma": planted.sigma,
           "groups": groups_out})
    return 0


# ---- report ----------------------------------------------------------------

def _read_values(path: str, column: str | None, where: list[str]) -> dict[str, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for cond in where:
        key, _, val = cond.partition("=")
        rows = [r for r in rows if r.get(key) == val]
    if not rows:
        return {}
    col = column or next(c for c in reversed(list(rows[0])) if c != "state")
    return {r["state"]: float(r[col]) for r in rows}


def cmd_report_choropleth(a) -> int:
    geom = report.load_geometry(a.geometry) if a.geometry else pipeline._tile_geometry()
    values = _read_values(a.values, a.column, a.where)
    Path(a.out).write_text(report.render_choropleth(values, geom, a.title or Path(a.values).stem, a.vmin, a.vmax), encoding="utf-8")
    return 0


def cmd_report_wordcloud(a) -> int:
    from .topicmodel.meta import read_top_words

    rows = []
    for k, words in sorted(read_top_words(a.topwords).items()):
        for w, size in report.render_wordcloud_data(words[: a.n]):
            rows.append({"topic": k, "word": w, "size": size})
    pipeline._write_csv(Path(a.out), rows, ["topic", "word", "size"])
    return 0


# ---- pipeline --------------------------------------------------------------

def _parse_set(items: list[str]) -> dict:
    """``a.b.c=value`` overrides, values parsed as YAML scalars."""
    out: dict = {}
    for item in items:
        path, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        node = out
        keys = path.split(".")
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = yaml.safe_load(raw)
    return out


def cmd_pipeline_run(a) -> int:
    cfg = pipeline.load_config(a.config, _parse_set(a.set))
    results = pipeline.run_pipeline(cfg, a.out, a.seed, a.threads)
    for name, r in results.items():
        print(f"{name}\t{'cached' if r.cached else 'ran'}\t{json.dumps(r.counts, sort_keys=True)}")
    return 0


# ---- parser ----------------------------------------------------------------

def _lda_common(p, corpus_required=True) -> None:
    p.add_argument("--corpus", required=corpus_required)
    p.add_argument("--alpha", type=float, default=None, help="default 50/K")
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-count", type=int, default=4)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--extra-stopwords", nargs="*", default=[])
    p.add_argument("--all-documents", dest="geocoded_only", action="store_false",
                   help="train on every document, not only geocoded ones")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tweetmine")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, merge, dedup, filter and clean records")
    p.add_argument("--input", nargs="+", required=True, help="record files or globs")
    p.add_argument("--keywords", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--max-distance", type=float, default=0.95)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("geocode", help="attach a US state to each message")
    p.add_argument("--corpus", required=True)
    p.add_argument("--gazetteer", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--radius-km", type=float, default=100.0)
    p.add_argument("--stats", action="store_true", help="print per-tier resolution counts")
    p.set_defaults(func=cmd_geocode)

    p = sub.add_parser("classify", help="label messages promotional or consumer; 'classify eval' scores against gold labels")
    p.add_argument("action", nargs="?", choices=["eval"])
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--gold")
    p.set_defaults(func=cmd_classify)

    lda = sub.add_parser("lda", help="topic model").add_subparsers(dest="lda_command", required=True)
    p = lda.add_parser("train")
    _lda_common(p)
    p.add_argument("--K", "-k", type=int, default=150)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lda_train)
    p = lda.add_parser("select-k")
    _lda_common(p)
    p.add_argument("--k", type=int, nargs="+", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lda_select_k)
    p = lda.add_parser("assign")
    p.add_argument("--model", required=True)
    p.add_argument("--cutoff", type=float, default=0.15)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lda_assign)
    p = lda.add_parser("topwords")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lda_topwords)
    p = lda.add_parser("calibrate", help="draw a review sheet, or score a reviewed one with --sheet")
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--cutoffs", type=float, nargs="+", default=[0.10, 0.15, 0.20])
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--sheet")
    p.add_argument("--threshold", type=float, default=0.80)
    p.set_defaults(func=cmd_lda_calibrate)

    sv = sub.add_parser("survey", help="weighted survey estimates").add_subparsers(dest="survey_command", required=True)
    p = sv.add_parser("estimates")
    p.add_argument("--respondents", nargs="+", required=True)
    p.add_argument("--groups", default=None, help="question-group YAML (default: shipped groups)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_survey_estimates)

    p = sub.add_parser("analyze", help="research-question tables")
    p.add_argument("question", choices=["rq1", "rq2", "rq3"])
    p.add_argument("--model", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--corpus", required=True, help="classified (and geocoded) corpus")
    p.add_argument("--meta", default=None, help="topic metadata CSV")
    p.add_argument("--survey", nargs="*", default=[])
    p.add_argument("--groups", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--top-n", type=int, default=20)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--all-pairs", action="store_true")
    p.add_argument("--exact-keywords", action="store_true", help="disable prefix keyword matching")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--permutations", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--all-documents", dest="geocoded_only", action="store_false")
    p.set_defaults(func=cmd_analyze)

    sy = sub.add_parser("synth", help="synthetic corpora and surveys").add_subparsers(dest="synth_command", required=True)
    p = sy.add_parser("corpus")
    p.add_argument("--spec", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_corpus)
    p = sy.add_parser("survey")
    p.add_argument("--truth", required=True, help="truth.json or the directory holding it")
    p.add_argument("--target-rho", type=float, required=True)
    p.add_argument("--qg", default="QG1")
    p.add_argument("--topic", type=int, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--groups-out", default=None)
    p.set_defaults(func=cmd_synth_survey)

    rp = sub.add_parser("report", help="figures").add_subparsers(dest="report_command", required=True)
    p = rp.add_parser("choropleth")
    p.add_argument("--values", required=True, help="CSV with a state column")
    p.add_argument("--column", default=None, help="value column (default: last non-state column)")
    p.add_argument("--where", nargs="*", default=[], help="row filters col=value")
    p.add_argument("--geometry", default=None, help="GeoJSON; default is a tile grid")
    p.add_argument("--title", default=None)
    p.add_argument("--vmin", type=float, default=None)
    p.add_argument("--vmax", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report_choropleth)
    p = rp.add_parser("wordcloud")
    p.add_argument("--topwords", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report_wordcloud)

    pl = sub.add_parser("pipeline", help="whole pipeline").add_subparsers(dest="pipeline_command", required=True)
    p = pl.add_parser("run")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. topicmodel.K=20")
    p.set_defaults(func=cmd_pipeline_run)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except pipeline.StageError as exc:
        print(f"error: stage {exc.stage} failed: {type(exc.cause).__name__}: {exc.cause}", file=sys.stderr)
        return 1
    except (ConfigError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
