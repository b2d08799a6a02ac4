from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tweetmine.synth import SynthSpec, generate_corpus  # noqa: E402
from tweetmine.topicmodel import IndexedCorpus, Vocabulary  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"

# acceptance criteria: number -> (title, outcome); outcome is FAIL if any phase fails
_criteria: dict[int, list] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n, title = props["criterion"]
    entry = _criteria.setdefault(n, [title, None])
    if report.failed:
        entry[1] = "FAIL"
    elif report.when == "call" and report.passed and entry[1] is None:
        entry[1] = "PASS"
    elif report.skipped and entry[1] is None:
        entry[1] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, outcome = _criteria[n]
        terminalreporter.write_line(f"{outcome or 'FAIL'}  criterion {n:2d}: {title}")


def corpus_from_truth(rows, min_count=1) -> IndexedCorpus:
    from tweetmine.ingest import clean_text
    from tweetmine.records import record_from_json
    from tweetmine.topicmodel import build_vocabulary, load_stopwords

    seen, ids, toks = set(), [], []
    for r in rows:
        if r["id"] in seen or r.get("lang", "en") != "en":
            continue
        seen.add(r["id"])
        c = clean_text(record_from_json(r))
        ids.append(c.id)
        toks.append(c.tokens)
    return build_vocabulary(ids, toks, load_stopwords(extra=["hpv"]), min_count)


def tiny_corpus(n_docs=200, V=40, K=4, seed=3) -> IndexedCorpus:
    rng = np.random.Generator(np.random.PCG64(seed))
    words = [f"w{i:03d}" for i in range(V)]
    docs = []
    for _ in range(n_docs):
        k = int(rng.integers(K))
        block = np.arange(k * V // K, (k + 1) * V // K)
        docs.append([int(w) for w in rng.choice(block, size=int(rng.integers(5, 15)))])
    vocab = Vocabulary(words, np.bincount(np.concatenate([np.asarray(d) for d in docs]), minlength=V))
    return IndexedCorpus(vocab, [f"d{i}" for i in range(n_docs)], [np.asarray(d, np.int32) for d in docs], [])


@pytest.fixture(scope="session")
def recovery_setup():
    """The planted K=10, V=500, D=5,000 corpus and its ground truth."""
    spec = SynthSpec(K=10, V=500, D=5000, mean_doc_length=15, alpha=0.1, seed=11,
                     non_english_share=0.0, duplicate_share=0.0, n_sources=1)
    sources, truth = generate_corpus(spec)
    corpus = corpus_from_truth(sources[0])
    return corpus, truth


@pytest.fixture(scope="session")
def recovery_models(recovery_setup):
    """Default-prior models at the true K and at 2K, 1,000 sweeps each (trained once per session)."""
    import time

    from tweetmine.topicmodel import train

    corpus, truth = recovery_setup
    t0 = time.perf_counter()
    m10 = train(corpus, 10, iterations=1000, seed=1)
    elapsed = time.perf_counter() - t0
    m20 = train(corpus, 20, iterations=1000, seed=1)
    return {"K10": m10, "K20": m20, "seconds_K10": elapsed}


def gazetteer_path() -> str:
    from importlib import resources

    return str(resources.files("tweetmine.data").joinpath("gazetteer_us.tsv"))


def pipeline_workspace(root: Path, D=1500, K=5, iterations=60, seed=2, target_rho=0.9, survey_seed=0) -> dict:
    """Write a synthetic corpus and planted survey under ``root``; return a pipeline config for them."""
    from tweetmine.synth import plant_geo_correlation, write_corpus, write_planted_survey

    data = root / "data"
    truth = write_corpus(SynthSpec(K=K, D=D, seed=seed), data)
    planted = plant_geo_correlation(truth, "QG1", target_rho=target_rho, seed=survey_seed)
    write_planted_survey(planted, data / "survey.csv", data / "groups.yaml")
    return {
        "seed": 0,
        "inputs": {
            "records": [str(data / "source*.jsonl")],
            "keywords": str(data / "keywords.txt"),
            "gazetteer": gazetteer_path(),
            "survey": [str(data / "survey.csv")],
            "groups": str(data / "groups.yaml"),
        },
        "topicmodel": {"K": K, "iterations": iterations, "min_count": 2, "extra_stopwords": ["hpv"]},
    }
