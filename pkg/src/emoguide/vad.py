"""VAD lexicon machinery.

Words carry 3-dim affect coordinates (valence, arousal, dominance), each in
[0, 1]: valence runs negative -> positive, arousal calm -> excited, dominance
submissive -> dominant.  A lexicon maps word tokens to such vectors and is
total: tokens without an entry resolve to a configurable default, the cube's
neutral midpoint (0.5, 0.5, 0.5), so they contribute no polarity signal.

Lexicons and aligned matrices are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

NEUTRAL_MIDPOINT = (0.5, 0.5, 0.5)

_WORD_RE = re.compile(r"[\w']+")


def tokenize(text: str) -> list[str]:
    """Lowercase word tokenizer; punctuation is dropped."""
    return _WORD_RE.findall(text.lower())


class LexiconFormatError(ValueError):
    """Raised for malformed lexicon input; messages carry the row number."""


@dataclass(frozen=True)
class VadVector:
    """A point in the unit VAD cube."""

    valence: float
    arousal: float
    dominance: float

    def __post_init__(self) -> None:
        for name, value in (
            ("valence", self.valence),
            ("arousal", self.arousal),
            ("dominance", self.dominance),
        ):
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")

    def to_array(self) -> np.ndarray:
        return np.array([self.valence, self.arousal, self.dominance], dtype=np.float64)

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "VadVector":
        v, a, d = (float(x) for x in arr)
        return cls(v, a, d)


class Coverage(NamedTuple):
    listed: int
    defaulted: int

    @property
    def fraction_listed(self) -> float:
        total = self.listed + self.defaulted
        return self.listed / total if total else 0.0


@dataclass(frozen=True)
class VadLexicon:
    """Total token -> VadVector mapping with a default for unlisted tokens.

    Keys are case-normalized (lowercased) exactly once, at load time; lookups
    do not re-normalize.  ``collisions`` counts duplicate raw entries, which
    resolve to the last-listed value.
    """

    entries: dict[str, VadVector]
    default: VadVector = field(default=VadVector(*NEUTRAL_MIDPOINT))
    collisions: int = 0

    def lookup(self, token: str) -> VadVector:
        return self.entries.get(token, self.default)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def coverage(self, vocab: Iterable[str]) -> Coverage:
        """Count listed vs defaulted tokens for a vocabulary."""
        listed = defaulted = 0
        for token in vocab:
            if token in self.entries:
                listed += 1
            else:
                defaulted += 1
        return Coverage(listed, defaulted)


def load_lexicon(
    records: Iterable[tuple[str, float, float, float]],
    default: VadVector = VadVector(*NEUTRAL_MIDPOINT),
) -> VadLexicon:
    """Build a lexicon from (token, valence, arousal, dominance) records.

    Components outside [0, 1] are rejected with the offending row number.
    Duplicate tokens (after lowercasing) keep the last value and are counted
    as collisions.  An empty record set is an error.
    """
    entries: dict[str, VadVector] = {}
    collisions = 0
    count = 0
    for row_no, record in enumerate(records, start=1):
        count += 1
        try:
            token, v, a, d = record
        except (TypeError, ValueError) as exc:
            raise LexiconFormatError(f"row {row_no}: expected 4 fields") from exc
        if not isinstance(token, str) or not token:
            raise LexiconFormatError(f"row {row_no}: bad token {token!r}")
        try:
            vec = VadVector(float(v), float(a), float(d))
        except (TypeError, ValueError) as exc:
            raise LexiconFormatError(f"row {row_no}: {exc}") from exc
        key = token.lower()
        if key in entries:
            collisions += 1
        entries[key] = vec
    if count == 0:
        raise LexiconFormatError("empty lexicon source")
    return VadLexicon(entries=entries, default=default, collisions=collisions)


def load_lexicon_file(
    path, default: VadVector = VadVector(*NEUTRAL_MIDPOINT)
) -> VadLexicon:
    """Parse a UTF-8 TSV lexicon: token<TAB>valence<TAB>arousal<TAB>dominance.

    Blank lines and lines starting with '#' are ignored.  Row numbers in error
    messages refer to physical lines in the file.
    """

    def rows():
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                fields = stripped.split("\t")
                if len(fields) != 4:
                    raise LexiconFormatError(
                        f"row {line_no}: expected 4 tab-separated fields, got {len(fields)}"
                    )
                token, v, a, d = fields
                try:
                    yield line_no, (token, float(v), float(a), float(d))
                except ValueError as exc:
                    raise LexiconFormatError(f"row {line_no}: {exc}") from exc

    entries: dict[str, VadVector] = {}
    collisions = 0
    count = 0
    for line_no, (token, v, a, d) in rows():
        count += 1
        try:
            vec = VadVector(v, a, d)
        except ValueError as exc:
            raise LexiconFormatError(f"row {line_no}: {exc}") from exc
        key = token.lower()
        if key in entries:
            collisions += 1
        entries[key] = vec
    if count == 0:
        raise LexiconFormatError(f"empty lexicon file: {path}")
    return VadLexicon(entries=entries, default=default, collisions=collisions)


@dataclass(frozen=True)
class VadMatrix:
    """Per-token VAD rows aligned to a fixed vocabulary order.

    ``values`` has shape (vocab_size, 3), float64, and is read-only.
    ``listed`` counts vocabulary tokens that had a lexicon entry; the rest
    received the default row.
    """

    values: np.ndarray
    listed: int

    def __post_init__(self) -> None:
        v = self.values
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError(f"expected shape (V, 3), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite VAD value")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("VAD values must lie in [0, 1]")
        v.setflags(write=False)

    @property
    def vocab_size(self) -> int:
        return self.values.shape[0]

    @property
    def coverage(self) -> Coverage:
        return Coverage(self.listed, self.vocab_size - self.listed)

    def row(self, index: int) -> VadVector:
        return VadVector.from_array(self.values[index])


def align_vocab(lexicon: VadLexicon, vocab: Sequence[str]) -> VadMatrix:
    """Stack lexicon rows in vocabulary order, defaulting unlisted tokens."""
    if len(vocab) == 0:
        raise ValueError("empty vocabulary")
    values = np.empty((len(vocab), 3), dtype=np.float64)
    listed = 0
    default_row = lexicon.default.to_array()
    for i, token in enumerate(vocab):
        vec = lexicon.entries.get(token)
        if vec is None:
            values[i] = default_row
        else:
            values[i] = vec.to_array()
            listed += 1
    return VadMatrix(values=values, listed=listed)


def utterance_mean_vad(lexicon: VadLexicon, tokens: Sequence[str]) -> VadVector:
    """Arithmetic mean of per-token VAD vectors; empty input is an error."""
    if len(tokens) == 0:
        raise ValueError("cannot average VAD over an empty token sequence")
    acc = np.zeros(3, dtype=np.float64)
    for token in tokens:
        acc += lexicon.lookup(token).to_array()
    return VadVector.from_array(acc / len(tokens))


def check_distribution(probs: np.ndarray, vocab_size: int | None = None) -> np.ndarray:
    """Validate a probability vector: finite, nonnegative, sums to 1 within 1e-9."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"expected a 1-d distribution, got shape {p.shape}")
    if vocab_size is not None and p.shape[0] != vocab_size:
        raise ValueError(f"distribution length {p.shape[0]} != vocab size {vocab_size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("non-finite probability")
    if p.min() < 0.0:
        raise ValueError("negative probability")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


def expected_vad(probs: np.ndarray, matrix: VadMatrix) -> VadVector:
    """Probability-weighted mean VAD vector under a token distribution."""
    p = check_distribution(probs, matrix.vocab_size)
    return VadVector.from_array(p @ matrix.values)
