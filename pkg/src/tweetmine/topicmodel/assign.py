from __future__ import annotations

import csv
import random
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .model import LdaModel

Assignments = dict[str, list[tuple[int, float]]]


def assign_topics(model: LdaModel, cutoff: float = 0.15) -> Assignments:
    """Topics whose document probability is at least ``cutoff``, most probable first."""
    if not 0.0 < cutoff < 1.0:
        raise ValueError("cutoff must lie in (0, 1)")
    theta = model.theta()
    out: Assignments = {}
    for did, row in zip(model.doc_ids, theta):
        ks = np.flatnonzero(row >= cutoff)
        # stable sort: equal probabilities keep ascending topic order
        ks = ks[np.argsort(-row[ks], kind="stable")]
        out[did] = [(int(k), float(row[k])) for k in ks]
    return out


def assignment_counts(assignments: Mapping[str, Sequence]) -> tuple[int, int]:
    """(assigned, unassigned) document counts."""
    assigned = sum(1 for v in assignments.values() if v)
    return assigned, len(assignments) - assigned


def top_words(model: LdaModel, k: int, n: int = 10) -> list[tuple[str, float]]:
    if not 0 <= k < model.K:
        raise IndexError(f"topic {k} out of range")
    if n < 1:
        raise ValueError("n must be >= 1")
    row = model.phi()[k]
    # ties broken by vocabulary index
    order = np.lexsort((np.arange(len(row)), -row))[:n]
    return [(model.vocab.words[i], float(row[i])) for i in order]


def calibration_sample(
    model: LdaModel,
    texts: Mapping[str, str],
    cutoffs: Sequence[float],
    n: int = 100,
    seed: int = 0,
    n_words: int = 10,
) -> list[dict]:
    """Review sheet rows: ``n`` uniformly drawn assigned documents per candidate cutoff.

    The ``verdict`` column is left blank for a human reviewer (``1``/``0``).
    """
    rows = []
    words = {k: " ".join(w for w, _ in top_words(model, k, n_words)) for k in range(model.K)}
    for c in cutoffs:
        assign = assign_topics(model, c)
        pool = sorted(d for d, v in assign.items() if v)
        if n > len(pool):
            raise ValueError(f"cutoff {c}: only {len(pool)} assigned documents, asked for {n}")
        rng = random.Random(f"{seed}:{c}")
        for did in rng.sample(pool, n):
            topics = assign[did]
            rows.append({
                "cutoff": c,
                "id": did,
                "text": texts.get(did, ""),
                "topics": ";".join(f"{k}:{p:.4f}" for k, p in topics),
                "top_words": " | ".join(words[k] for k, _ in topics),
                "verdict": "",
            })
    return rows


def write_sheet(path: str | Path, rows: Sequence[dict]) -> None:
    fields = ["cutoff", "id", "text", "topics", "top_words", "verdict"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def read_sheet(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _truthy(v) -> bool:
    return str(v).strip().lower() in ("1", "y", "yes", "true", "adequate")


def calibration_score(sheet: Sequence[Mapping], threshold: float = 0.80) -> tuple[dict[float, float], float | None]:
    """Adequacy fraction per cutoff and the lowest cutoff whose adequacy exceeds ``threshold``.

    Rows without a verdict are ignored.
    """
    tally: dict[float, list[int]] = {}
    for row in sheet:
        v = row.get("verdict", "")
        if v is None or str(v).strip() == "":
            continue
        c = float(row["cutoff"])
        tally.setdefault(c, [0, 0])
        tally[c][0] += _truthy(v)
        tally[c][1] += 1
    adequacy = {c: a / n for c, (a, n) in sorted(tally.items())}
    return adequacy, select_cutoff(adequacy, threshold)


def select_cutoff(adequacy: Mapping[float, float], threshold: float = 0.80) -> float | None:
    passing = [c for c, a in adequacy.items() if a > threshold]
    return min(passing) if passing else None
