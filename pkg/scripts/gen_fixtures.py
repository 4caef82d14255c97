#!/usr/bin/env python3
"""Regenerate the packaged data fixtures that derive from the word bank.

Writes src/emoguide/data/vad_lexicon.tsv and selfchat_seeds.jsonl.  Both are
committed; tests assert they stay in sync with the word bank in corpus.py.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from emoguide.corpus import WORD_BANK, _sample_utterance  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "emoguide" / "data"

SEED_COUNTS = (("negative", 33), ("neutral", 34), ("positive", 33))
SEED_RNG = 20240817


def lexicon_text() -> str:
    lines = ["# synthetic VAD lexicon: token\tvalence\tarousal\tdominance"]
    for band, rows in WORD_BANK.items():
        lines.append(f"# band: {band}")
        for word, v, a, d in rows:
            lines.append(f"{word}\t{v}\t{a}\t{d}")
    return "\n".join(lines) + "\n"


def seeds_records() -> list[dict]:
    rng = np.random.default_rng(SEED_RNG)
    records = []
    for label, count in SEED_COUNTS:
        for _ in range(count):
            n_words = int(rng.integers(3, 8))
            records.append(
                {"text": _sample_utterance(rng, label, n_words, 0.0), "polarity": label}
            )
    order = rng.permutation(len(records))
    return [records[i] for i in order]


def seeds_text() -> str:
    return "\n".join(json.dumps(r, sort_keys=True) for r in seeds_records()) + "\n"


def main() -> None:
    (DATA / "vad_lexicon.tsv").write_text(lexicon_text(), encoding="utf-8")
    (DATA / "selfchat_seeds.jsonl").write_text(seeds_text(), encoding="utf-8")
    print(f"wrote {DATA / 'vad_lexicon.tsv'}")
    print(f"wrote {DATA / 'selfchat_seeds.jsonl'}")


if __name__ == "__main__":
    main()
