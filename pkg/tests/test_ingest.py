from __future__ import annotations

import csv
import gzip
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from tweetmine.ingest import (
    ConfigError,
    KeywordPattern,
    clean_text,
    ingest,
    language_filter,
    load_keywords,
    merge_dedup,
    parse_records,
    relevance_filter,
)
from tweetmine.langid import UNKNOWN, TrigramDetector
from tweetmine.records import (
    MessageRecord,
    format_timestamp,
    iter_jsonl,
    parse_timestamp,
    record_from_json,
    write_jsonl,
)

TS = "2017-03-04T05:06:07Z"


def rec(rid, text="hpv", **kw):
    return MessageRecord(id=str(rid), text=text, created_at=parse_timestamp(TS), **kw)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---- records / parsing -----------------------------------------------------

def test_record_without_url_entity():
    r = record_from_json({"id": "1", "text": "hpv shot", "created_at": TS})
    assert r.has_url is False
    assert r.id == "1"
    assert r.month_key == "2017-03"


def test_url_from_text_or_entity_list():
    assert record_from_json({"id": 1, "text": "see https://x.org", "created_at": TS}).has_url
    assert record_from_json({"id": 1, "text": "see t.co/abc", "created_at": TS}).has_url
    assert record_from_json({"id": 1, "text": "no link", "created_at": TS, "urls": ["u"]}).has_url
    assert not record_from_json({"id": 1, "text": "no link", "created_at": TS, "urls": []}).has_url


def test_twitter_timestamp_format_is_utc():
    dt = parse_timestamp("Wed Aug 27 13:08:45 +0200 2016")
    assert format_timestamp(dt) == "2016-08-27T11:08:45Z"


def test_month_bucket_uses_utc():
    r = record_from_json({"id": 1, "text": "x", "created_at": "2016-01-31T23:30:00-05:00"})
    assert r.month_key == "2016-02"


def test_missing_created_at_is_malformed(tmp_path):
    p = write_lines(tmp_path / "a.jsonl", [json.dumps({"id": "1", "text": "hpv"})])
    recs, rep = parse_records(p)
    assert recs == [] and rep.malformed == 1


def test_three_valid_one_invalid(tmp_path):
    lines = [json.dumps({"id": str(i), "text": "hpv", "created_at": TS}) for i in range(3)] + ["{not json"]
    recs, rep = parse_records(write_lines(tmp_path / "a.jsonl", lines))
    assert len(recs) == 3
    assert (rep.parsed, rep.malformed) == (3, 1)


def test_bad_coordinates_are_malformed(tmp_path):
    lines = [json.dumps({"id": "1", "text": "hpv", "created_at": TS, "latitude": 95.0, "longitude": 0})]
    assert parse_records(write_lines(tmp_path / "a.jsonl", lines))[1].malformed == 1


def test_gzip_input_and_deterministic_gzip_output(tmp_path):
    rows = [{"id": str(i), "text": "hpv", "created_at": TS} for i in range(5)]
    a, b = tmp_path / "a.jsonl.gz", tmp_path / "b.jsonl.gz"
    write_jsonl(a, rows)
    write_jsonl(b, rows)
    assert a.read_bytes() == b.read_bytes()
    recs, rep = parse_records(a)
    assert len(recs) == 5 and rep.malformed == 0
    with gzip.open(a, "rt") as fh:
        assert len(fh.readlines()) == 5


def test_unreadable_file_raises(tmp_path):
    with pytest.raises(OSError):
        parse_records(tmp_path / "missing.jsonl")


# ---- merge / dedup ----------------------------------------------------------

def test_dedup_shared_id():
    out = merge_dedup([[rec(7, "first")], [rec(7, "second")]])
    assert [r.id for r in out] == ["7"]
    assert out[0].text == "first"


def test_dedup_disjoint():
    assert len(merge_dedup([[rec(i) for i in range(3)], [rec(i) for i in range(3, 7)]])) == 7


@given(st.lists(st.lists(st.integers(0, 30), max_size=20), max_size=4))
def test_dedup_properties(ids):
    datasets = [[rec(i, f"{j}") for i in ds] for j, ds in enumerate(ids)]
    out = merge_dedup(datasets)
    flat = [i for ds in ids for i in ds]
    assert len(out) == len(set(flat))
    assert [r.id for r in out] == [str(i) for i in dict.fromkeys(flat)]
    assert merge_dedup([out]) == out


# ---- relevance -------------------------------------------------------------

def test_conjunctive_prefix_pattern():
    kept = relevance_filter([rec(1, "the hpv vaccination drive")], ["hpv + vaccin*"])
    assert len(kept) == 1


def test_exact_term_pattern():
    assert len(relevance_filter([rec(1, "gardasil works")], ["gardasil"])) == 1


def test_unrelated_text_dropped():
    pats = ["hpv", "human papillomavirus", "gardasil", "cervarix", "hpv + vaccin*"]
    assert relevance_filter([rec(1, "flu season")], pats) == []


def test_term_needs_word_boundary():
    p = KeywordPattern.parse("hpv")
    assert p.matches("#HPV awareness")
    assert not p.matches("shpvx")
    assert not KeywordPattern.parse("vaccin").matches("vaccine")
    assert KeywordPattern.parse("vaccin*").matches("vaccines work")


def test_empty_pattern_list_rejected():
    with pytest.raises(ConfigError):
        relevance_filter([rec(1)], [])
    with pytest.raises(ConfigError):
        KeywordPattern.parse("hpv + ")


def test_keyword_file_skips_comments(tmp_path):
    p = write_lines(tmp_path / "k.txt", ["# comment", "hpv", "", "hpv + vaccin*"])
    assert [k.source for k in load_keywords(p)] == ["hpv", "hpv + vaccin*"]


# ---- language ---------------------------------------------------------------

def test_lang_field_routes():
    en, other = language_filter([rec(1, lang="en"), rec(2, lang="es")])
    assert [r.id for r in en] == ["1"] and [r.id for r in other] == ["2"]


def test_detector_on_spanish_sentence():
    r = rec(1, "la vacuna contra el virus del papiloma humano es segura y eficaz")
    en, other = language_filter([r])
    assert en == [] and other == [r]


def test_detector_on_labeled_fixture():
    det = TrigramDetector()
    with open(FIXTURES / "lang_sentences.tsv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh, delimiter="\t"))
    assert len(rows) >= 5 * 200
    per_lang = {}
    binary_ok = 0
    for row in rows:
        got = det.detect(row["text"])
        per_lang.setdefault(row["lang"], []).append(got == row["lang"])
        binary_ok += (got == "en") == (row["lang"] == "en")
    assert binary_ok == len(rows)
    for lang, hits in per_lang.items():
        assert sum(hits) / len(hits) >= 0.85, lang


def test_detector_gives_unknown_for_noise():
    assert TrigramDetector().detect("zzqx vvkj ppwq") == UNKNOWN
    assert TrigramDetector().detect("") == UNKNOWN


# ---- cleaning ---------------------------------------------------------------

@pytest.mark.parametrize(
    "text,tokens",
    [
        ("#HPV is real", ["hpv", "is", "real"]),
        ("@user1 thanks", ["thanks"]),
        ("see https://t.co/xxx now", ["see", "now"]),
        ("RT @who: #Gardasil, works!!", ["rt", "gardasil", "works"]),
        ("don't skip the hpv-vaccine", ["don't", "skip", "the", "hpv-vaccine"]),
    ],
)
def test_clean_text(text, tokens):
    assert clean_text(rec(1, text)).tokens == tokens


def test_text_emptied_by_cleaning():
    c = clean_text(rec(1, "@a https://t.co/z"))
    assert c.empty


@given(st.text(max_size=80))
@settings(max_examples=200)
def test_cleaning_output_shape(text):
    toks = clean_text(rec(1, text)).tokens
    for t in toks:
        assert t == t.lower()
        assert "#" not in t
        assert not t.startswith("@")
        assert any(ch.isalnum() for ch in t)


# ---- whole stage ------------------------------------------------------------

def test_ingest_counts(tmp_path):
    a = [{"id": str(i), "text": f"hpv news {i}", "created_at": TS, "lang": "en"} for i in range(5)]
    b = [{"id": "3", "text": "hpv again", "created_at": TS, "lang": "en"},
         {"id": "9", "text": "flu", "created_at": TS, "lang": "en"},
         {"id": "10", "text": "hpv vacuna", "created_at": TS, "lang": "es"}]
    pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    write_jsonl(pa, a)
    write_jsonl(pb, b)
    pb.write_text(pb.read_text() + "garbage\n")
    recs, cleaned, rep = ingest([pa, pb], ["hpv"])
    d = rep.to_json()
    assert d["total_parsed"] == 8 and d["malformed"] == 1
    assert d["duplicates"] == 1 and d["retained_after_dedup"] == 7
    assert d["irrelevant"] == 1 and d["non_english"] == 1
    assert d["cleaned"] == len(cleaned) == len(recs) == 5
    assert [c.id for c in cleaned] == ["0", "1", "2", "3", "4"]
    assert list(iter_jsonl(pa))[0]["id"] == "0"
