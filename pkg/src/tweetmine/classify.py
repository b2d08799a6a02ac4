"""Promotional vs. consumer labeling from URL / quote / retweet structure."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping

from .records import MessageRecord

_RT_PREFIX = re.compile(r"^\s*rt\s*(?:@|:)", re.IGNORECASE)


class MessageClass(str, Enum):
    PROMOTIONAL = "promotional"
    CONSUMER = "consumer"


def detect_retweet(record: MessageRecord) -> bool:
    return bool(record.is_retweet) or bool(_RT_PREFIX.match(record.text))


def classify_flags(has_url: bool, is_quote: bool, is_retweet: bool) -> MessageClass:
    if not has_url:
        return MessageClass.CONSUMER
    if is_quote and not is_retweet:
        return MessageClass.CONSUMER
    return MessageClass.PROMOTIONAL


def classify(record: MessageRecord) -> MessageClass:
    """Label a record from its raw (pre-cleaning) URL, quote and retweet status."""
    return classify_flags(record.has_url, record.is_quote, detect_retweet(record))


def parse_label(text: str) -> MessageClass:
    t = text.strip().lower()
    if t in ("promotional", "promo", "p", "promotional information"):
        return MessageClass.PROMOTIONAL
    if t in ("consumer", "c", "consumer discussion", "consumers' discussions"):
        return MessageClass.CONSUMER
    raise ValueError(f"unknown label {text!r}")


def load_annotations(path: str | Path) -> dict[str, MessageClass]:
    out: dict[str, MessageClass] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rid = row["id"].strip()
            if rid in out:
                raise ValueError(f"duplicate annotation id {rid!r}")
            out[rid] = parse_label(row["label"])
    return out


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f_measure: float

    def as_percent(self) -> tuple[float, float, float]:
        return tuple(round(100 * v, 2) for v in (self.precision, self.recall, self.f_measure))


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def metrics_from_counts(tp: int, fp: int, fn: int) -> Metrics:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return Metrics(p, r, f_measure(p, r))


def evaluate(
    predictions: Mapping[str, MessageClass], annotations: Mapping[str, MessageClass]
) -> dict[str, Metrics]:
    """Per-class and macro-averaged precision / recall / F.

    Every annotated id must have a prediction; a missing one raises ``KeyError``.
    """
    missing = [i for i in annotations if i not in predictions]
    if missing:
        raise KeyError(f"no prediction for annotated ids: {missing[:5]}")
    out = {}
    for cls in MessageClass:
        tp = fp = fn = 0
        for rid, gold in annotations.items():
            pred = predictions[rid]
            if pred == cls and gold == cls:
                tp += 1
            elif pred == cls:
                fp += 1
            elif gold == cls:
                fn += 1
        out[cls.value] = metrics_from_counts(tp, fp, fn)
    p = sum(m.precision for m in out.values()) / len(out)
    r = sum(m.recall for m in out.values()) / len(out)
    out["macro"] = Metrics(p, r, f_measure(p, r))
    return out
