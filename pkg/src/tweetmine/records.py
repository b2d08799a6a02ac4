"""Message record types and line-delimited JSON I/O."""

from __future__ import annotations

import gzip
import json
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

URL_RE = re.compile(r"(?:https?://|t\.co/)\S*", re.IGNORECASE)


@dataclass
class MessageRecord:
    id: str
    text: str
    created_at: datetime
    lang: str | None = None
    latitude: float | None = None
    longitude: float | None = None
    place_name: str | None = None
    user_location: str | None = None
    is_quote: bool = False
    is_retweet: bool = False
    has_url: bool = False
    source_tag: str = ""

    @property
    def month_key(self) -> str:
        return self.created_at.strftime("%Y-%m")

    def to_json(self) -> dict:
        d = asdict(self)
        d["created_at"] = format_timestamp(self.created_at)
        return d


@dataclass
class CleanMessage:
    id: str
    tokens: list[str]
    month_key: str
    is_quote: bool = False
    is_retweet: bool = False
    has_url: bool = False
    source_tag: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.tokens

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "tokens": self.tokens,
            "month_key": self.month_key,
            "is_quote": self.is_quote,
            "is_retweet": self.is_retweet,
            "has_url": self.has_url,
            "source_tag": self.source_tag,
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CleanMessage":
        known = {"id", "tokens", "month_key", "is_quote", "is_retweet", "has_url", "source_tag"}
        return cls(
            id=str(d["id"]),
            tokens=list(d["tokens"]),
            month_key=d["month_key"],
            is_quote=bool(d.get("is_quote", False)),
            is_retweet=bool(d.get("is_retweet", False)),
            has_url=bool(d.get("has_url", False)),
            source_tag=d.get("source_tag", ""),
            extra={k: v for k, v in d.items() if k not in known},
        )


def parse_timestamp(value) -> datetime:
    """Parse ISO-8601 or the classic Twitter ``created_at`` format into UTC."""
    if isinstance(value, (int, float)):
        return datetime.fromtimestamp(value, tz=timezone.utc)
    if not isinstance(value, str) or not value:
        raise ValueError(f"bad timestamp {value!r}")
    s = value.strip()
    try:
        dt = datetime.fromisoformat(s.replace("Z", "+00:00"))
    except ValueError:
        dt = datetime.strptime(s, "%a %b %d %H:%M:%S %z %Y")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def text_has_url(text: str) -> bool:
    return URL_RE.search(text) is not None


def _opt_float(value, lo, hi):
    if value is None or value == "":
        return None
    v = float(value)
    if not lo <= v <= hi:
        raise ValueError(f"coordinate {v} outside [{lo}, {hi}]")
    return v


def record_from_json(d: dict) -> MessageRecord:
    """Build a record from one decoded line; raises on missing or invalid fields."""
    rid = d.get("id")
    if rid is None or str(rid) == "":
        raise ValueError("missing id")
    text = d.get("text")
    if not isinstance(text, str):
        raise ValueError("missing text")
    created = parse_timestamp(d.get("created_at"))
    urls = d.get("urls") or []
    has_url = text_has_url(text) or len(urls) > 0
    return MessageRecord(
        id=str(rid),
        text=text,
        created_at=created,
        lang=d.get("lang") or None,
        latitude=_opt_float(d.get("latitude"), -90.0, 90.0),
        longitude=_opt_float(d.get("longitude"), -180.0, 180.0),
        place_name=d.get("place_name") or None,
        user_location=d.get("user_location") or None,
        is_quote=bool(d.get("is_quote", False)),
        is_retweet=bool(d.get("is_retweet", False)),
        has_url=has_url,
        source_tag=str(d.get("source_tag", "")),
    )


def open_text(path: str | Path, mode: str = "rt"):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode, encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open_text(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> int:
    n = 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".gz":
        # no name and mtime=0 keep gzip output byte-identical across runs
        with open(path, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as gz:
            for row in rows:
                gz.write((json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n").encode("utf-8"))
                n += 1
        return n
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            n += 1
    return n
