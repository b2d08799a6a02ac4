"""Weighted survey respondents, question groups, state-level population estimates."""

from __future__ import annotations

import csv
import math
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .geocode import is_state

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("id", "state", "weight")


@dataclass
class SurveyRespondent:
    id: str
    state: str
    weight: float
    answers: dict[str, str] = field(default_factory=dict)


@dataclass
class Question:
    id: str
    interested: frozenset[str]
    keywords: tuple[str, ...] = ()
    text: str = ""


@dataclass
class QuestionGroup:
    id: str
    questions: list[Question]
    construct: str = ""
    label: str = ""

    def __post_init__(self):
        if not self.questions:
            raise ValueError(f"question group {self.id!r} has no questions")
        for q in self.questions:
            if not q.interested:
                raise ValueError(f"question {q.id!r} in {self.id!r} has no interested answers")

    @property
    def question_ids(self) -> list[str]:
        return [q.id for q in self.questions]


def load_respondents(path: str | Path) -> tuple[list[SurveyRespondent], int]:
    """Read a respondent CSV; returns respondents and the number of skipped rows."""
    out, skipped = [], 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in cols]
        if missing:
            raise ValueError(f"{path}: missing required columns {missing}")
        qcols = [c for c in cols if c not in REQUIRED_COLUMNS]
        for row in reader:
            state = (row["state"] or "").strip().upper()
            try:
                weight = float(row["weight"])
            except (TypeError, ValueError):
                weight = 0.0
            if not is_state(state) or not weight > 0:
                skipped += 1
                continue
            answers = {q: row[q].strip() for q in qcols if row.get(q) not in (None, "")}
            out.append(SurveyRespondent(row["id"], state, weight, answers))
    if skipped:
        logger.info("%s: skipped %d respondents without state or positive weight", path, skipped)
    return out, skipped


def write_respondents(path: str | Path, respondents: Sequence[SurveyRespondent], questions: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*REQUIRED_COLUMNS, *questions])
        for r in respondents:
            w.writerow([r.id, r.state, repr(float(r.weight)), *(r.answers.get(q, "") for q in questions)])


def load_groups(path: str | Path | None = None) -> list[QuestionGroup]:
    """Question groups from YAML; ``None`` loads the shipped five-group configuration."""
    if path is None:
        text = resources.files("tweetmine.data").joinpath("question_groups.yaml").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return groups_from_dict(yaml.safe_load(text))


def groups_from_dict(data: Mapping) -> list[QuestionGroup]:
    groups = []
    for g in data["groups"]:
        qs = []
        for q in g["questions"]:
            kws = tuple(str(k).lower() for k in q.get("keywords") or ())
            if "keywords" in q and not kws:
                raise ValueError(f"question {q['id']!r} has an empty keyword set")
            qs.append(Question(str(q["id"]), frozenset(str(a) for a in q["interested"]), kws, q.get("text", "")))
        groups.append(QuestionGroup(str(g["id"]), qs, g.get("construct", ""), g.get("label", "")))
    return groups


def groups_to_dict(groups: Iterable[QuestionGroup]) -> dict:
    return {
        "groups": [
            {
                "id": g.id,
                "label": g.label,
                "construct": g.construct,
                "questions": [
                    {"id": q.id, "text": q.text, "interested": sorted(q.interested), "keywords": list(q.keywords)}
                    for q in g.questions
                ],
            }
            for g in groups
        ]
    }


def group_indicator(respondent: SurveyRespondent, qg: QuestionGroup) -> bool:
    """True when any member question carries an answer of interest; missing answers count as no."""
    for q in qg.questions:
        a = respondent.answers.get(q.id)
        if a is not None and a in q.interested:
            return True
    return False


def state_estimates(respondents: Iterable[SurveyRespondent], qg: QuestionGroup) -> dict[str, float]:
    """Weighted share of respondents with the group indicator set, per state."""
    num: dict[str, list[float]] = defaultdict(list)
    den: dict[str, list[float]] = defaultdict(list)
    for r in respondents:
        den[r.state].append(r.weight)
        if group_indicator(r, qg):
            num[r.state].append(r.weight)
    # correctly rounded sums keep the estimate exactly invariant under power-of-two weight scaling
    return {s: min(1.0, math.fsum(num[s]) / math.fsum(den[s])) for s in sorted(den)}
