"""Parse, merge, filter and clean raw message records."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .langid import TrigramDetector
from .records import URL_RE, CleanMessage, MessageRecord, iter_jsonl, open_text, record_from_json

logger = logging.getLogger(__name__)

_MENTION_RE = re.compile(r"@\w*")
_WORD_RE = re.compile(r"\w+(?:['\-]\w+)*|\S", re.UNICODE)


class ConfigError(ValueError):
    """Raised for unusable pipeline configuration (bad patterns, missing keys)."""


@dataclass
class ParseReport:
    path: str
    parsed: int = 0
    malformed: int = 0


def parse_records(path: str | Path, source_tag: str | None = None) -> tuple[list[MessageRecord], ParseReport]:
    """Read one line-delimited JSON record file (optionally gzipped).

    Malformed lines are skipped and tallied in the returned report. An
    unreadable file raises ``OSError``.
    """
    path = Path(path)
    report = ParseReport(str(path))
    records = []
    with open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                d = json.loads(line)
                if source_tag is not None and not d.get("source_tag"):
                    d["source_tag"] = source_tag
                records.append(record_from_json(d))
            except (ValueError, TypeError, KeyError) as exc:
                report.malformed += 1
                logger.warning("%s:%d skipped: %s", path, lineno, exc)
    report.parsed = len(records)
    return records, report


def merge_dedup(datasets: Iterable[Iterable[MessageRecord]]) -> list[MessageRecord]:
    """Concatenate datasets keeping the first record seen for every id."""
    seen: set[str] = set()
    out = []
    for records in datasets:
        for rec in records:
            if rec.id in seen:
                continue
            seen.add(rec.id)
            out.append(rec)
    return out


@dataclass
class KeywordPattern:
    """One relevance pattern: a conjunction of terms, each optionally a prefix (``vaccin*``)."""

    source: str
    terms: list[tuple[str, bool]] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "KeywordPattern":
        parts = [p.strip().lower() for p in text.split("+")]
        if not parts or any(not p or p == "*" for p in parts):
            raise ConfigError(f"bad keyword pattern {text!r}")
        terms = [(p[:-1], True) if p.endswith("*") else (p, False) for p in parts]
        return cls(text.strip(), terms)

    def _regex(self, term: str, prefix: bool) -> re.Pattern:
        words = r"\s+".join(re.escape(w) for w in term.split())
        tail = r"\w*" if prefix else ""
        return re.compile(rf"(?<!\w){words}{tail}(?!\w)")

    def matches(self, text: str) -> bool:
        low = text.lower()
        return all(self._regex(t, p).search(low) for t, p in self.terms)


def load_keywords(path: str | Path) -> list[KeywordPattern]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [KeywordPattern.parse(ln) for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]


def relevance_filter(records: Sequence[MessageRecord], patterns: Sequence[KeywordPattern | str]) -> list[MessageRecord]:
    if not patterns:
        raise ConfigError("relevance filter needs at least one keyword pattern")
    pats = [p if isinstance(p, KeywordPattern) else KeywordPattern.parse(p) for p in patterns]
    return [r for r in records if any(p.matches(r.text) for p in pats)]


def language_filter(
    records: Sequence[MessageRecord], detector: TrigramDetector | None = None
) -> tuple[list[MessageRecord], list[MessageRecord]]:
    """Split into (english, other). The record's own ``lang`` wins when present."""
    english, other = [], []
    for rec in records:
        if rec.lang:
            is_en = rec.lang.lower() == "en"
        else:
            if detector is None:
                detector = TrigramDetector()
            is_en = detector.detect(rec.text) == "en"
        (english if is_en else other).append(rec)
    return english, other


def clean_text(record: MessageRecord) -> CleanMessage:
    """Strip URLs, mentions and ``#`` symbols, lowercase, tokenize.

    A record whose text is emptied by cleaning gets an empty token list.
    """
    text = URL_RE.sub(" ", record.text)
    text = _MENTION_RE.sub(" ", text)
    text = text.replace("#", " ").lower()
    tokens = [t for t in _WORD_RE.findall(text) if t.strip() and any(ch.isalnum() for ch in t)]
    return CleanMessage(
        id=record.id,
        tokens=tokens,
        month_key=record.month_key,
        is_quote=record.is_quote,
        is_retweet=record.is_retweet,
        has_url=record.has_url,
        source_tag=record.source_tag,
    )


@dataclass
class IngestReport:
    files: list[ParseReport]
    total_parsed: int
    duplicates: int
    retained_after_dedup: int
    irrelevant: int
    non_english: int
    empty_after_cleaning: int
    cleaned: int

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["files"] = [f.__dict__ for f in self.files]
        d["malformed"] = sum(f.malformed for f in self.files)
        return d


def ingest(
    paths: Sequence[str | Path],
    patterns: Sequence[KeywordPattern | str],
    detector: TrigramDetector | None = None,
) -> tuple[list[MessageRecord], list[CleanMessage], IngestReport]:
    """Run the whole ingest stage; returns retained raw records, their cleaned forms, counts."""
    datasets, reports = [], []
    for p in paths:
        recs, rep = parse_records(p)
        datasets.append(recs)
        reports.append(rep)
    total = sum(len(d) for d in datasets)
    merged = merge_dedup(datasets)
    relevant = relevance_filter(merged, patterns)
    english, other = language_filter(relevant, detector)
    cleaned = [clean_text(r) for r in english]
    report = IngestReport(
        files=reports,
        total_parsed=total,
        duplicates=total - len(merged),
        retained_after_dedup=len(merged),
        irrelevant=len(merged) - len(relevant),
        non_english=len(other),
        empty_after_cleaning=sum(c.empty for c in cleaned),
        cleaned=len(cleaned),
    )
    return english, cleaned, report
