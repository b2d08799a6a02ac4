from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


@dataclass
class TopicMeta:
    topic: int
    label: str = ""
    quality: str = "high"
    excluded: bool = False
    constructs: list[str] = field(default_factory=list)
    question_groups: list[str] = field(default_factory=list)


def _split(value: str | None) -> list[str]:
    return [v.strip() for v in (value or "").split(";") if v.strip()]


def load_topic_meta(path: str | Path) -> dict[int, TopicMeta]:
    """Read the human-authored topic sheet.

    Columns: ``topic, label, quality, excluded, constructs, question_groups``;
    list columns are ``;``-separated. Low-quality topics count as excluded.
    """
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            k = int(row["topic"])
            quality = (row.get("quality") or "high").strip().lower()
            excluded = (row.get("excluded") or "").strip().lower() in ("1", "true", "yes", "y")
            out[k] = TopicMeta(
                topic=k,
                label=(row.get("label") or "").strip(),
                quality=quality,
                excluded=excluded or quality == "low",
                constructs=_split(row.get("constructs")),
                question_groups=_split(row.get("question_groups")),
            )
    return out


def default_topic_meta(K: int) -> dict[int, TopicMeta]:
    return {k: TopicMeta(k) for k in range(K)}


def excluded_topics(meta: dict[int, TopicMeta]) -> set[int]:
    return {k for k, m in meta.items() if m.excluded}


def write_topic_meta_template(path: str | Path, K: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["topic", "label", "quality", "excluded", "constructs", "question_groups"])
        for k in range(K):
            w.writerow([k, "", "high", "false", "", ""])


def write_top_words(path: str | Path, table: Sequence[Sequence[tuple[str, float]]]) -> None:
    data = [{"topic": k, "words": [{"word": w, "probability": p} for w, p in words]} for k, words in enumerate(table)]
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def read_top_words(path: str | Path) -> dict[int, list[tuple[str, float]]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(t["topic"]): [(w["word"], float(w["probability"])) for w in t["words"]] for t in data}
