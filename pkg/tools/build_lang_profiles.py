"""Rebuild the shipped character-trigram language profiles.

The source is the per-language n-gram frequency tables distributed with the
``langdetect`` package (Wikipedia abstracts). Only trigrams are kept, folded
to lowercase, ranked by frequency and truncated.

    python tools/build_lang_profiles.py /path/to/langdetect/profiles
"""
import json
import sys
from collections import Counter
from pathlib import Path

LANGS = ("en", "es", "fr", "pt", "de")
TOP_N = 400


def main(profile_dir):
    out = {}
    for lang in LANGS:
        raw = json.loads((Path(profile_dir) / lang).read_text(encoding="utf-8"))
        counts = Counter()
        for gram, freq in raw["freq"].items():
            if len(gram) == 3:
                counts[gram.lower()] += freq
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:TOP_N]
        out[lang] = [g for g, _ in ranked]
    dest = Path(__file__).resolve().parents[1] / "src" / "tweetmine" / "data" / "lang_profiles.json"
    dest.write_text(json.dumps(out, ensure_ascii=False, indent=0) + "\n", encoding="utf-8")
    print(f"wrote {dest}")


if __name__ == "__main__":
    main(sys.argv[1])
