"""Character-trigram language identification (Cavnar & Trenkle ranked profiles).

Each language is a ranked list of its most frequent trigrams. A text is
profiled the same way and compared with the out-of-place rank distance; the
closest profile wins unless its normalized distance exceeds ``max_distance``,
in which case the text is reported as unknown.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from functools import lru_cache
from importlib import resources

_NON_LETTER = re.compile(r"[^\w']+|[\d_]+")
UNKNOWN = "und"


def trigrams(text: str) -> Counter:
    words = _NON_LETTER.sub(" ", text.lower()).split()
    grams: Counter = Counter()
    for w in words:
        padded = f" {w} "
        for i in range(len(padded) - 2):
            grams[padded[i : i + 3]] += 1
    return grams


def rank_profile(grams: Counter, top_n: int | None = None) -> list[str]:
    ranked = sorted(grams.items(), key=lambda kv: (-kv[1], kv[0]))
    if top_n is not None:
        ranked = ranked[:top_n]
    return [g for g, _ in ranked]


@lru_cache(maxsize=1)
def default_profiles() -> dict[str, list[str]]:
    raw = resources.files("tweetmine.data").joinpath("lang_profiles.json").read_text(encoding="utf-8")
    return json.loads(raw)


class TrigramDetector:
    def __init__(self, profiles: dict[str, list[str]] | None = None, max_distance: float = 0.95):
        profiles = profiles if profiles is not None else default_profiles()
        self.ranks = {lang: {g: i for i, g in enumerate(p)} for lang, p in profiles.items()}
        self.penalty = max(len(p) for p in profiles.values())
        self.max_distance = max_distance

    def distances(self, text: str) -> dict[str, float]:
        """Normalized out-of-place distance to every profile, in [0, 1]."""
        doc = rank_profile(trigrams(text), self.penalty)
        if not doc:
            return {lang: 1.0 for lang in self.ranks}
        out = {}
        for lang, ranks in self.ranks.items():
            d = 0
            for i, g in enumerate(doc):
                r = ranks.get(g)
                d += self.penalty if r is None else min(abs(r - i), self.penalty)
            out[lang] = d / (self.penalty * len(doc))
        return out

    def detect(self, text: str) -> str:
        dist = self.distances(text)
        lang = min(sorted(dist), key=dist.__getitem__)
        if dist[lang] > self.max_distance:
            return UNKNOWN
        return lang
