"""Corpus preprocessing and sampling machinery.

Turns raw text into training-ready token streams and builds the vocabulary,
the frequent-word subsampling probabilities, and the smoothed-unigram noise
table that negative sampling draws from.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, ParseError
from .rng import Lcg


def tokenize_line(text: str) -> list[str]:
    """Split one line of text into cleaned tokens.

    Splits on Unicode whitespace, drops tokens containing no alphanumeric
    character, and strips leading/trailing non-alphanumeric characters from
    the rest. Every returned token is nonempty and starts and ends with an
    alphanumeric character.
    """
    tokens = []
    for raw in text.split():
        i, j = 0, len(raw)
        while i < j and not raw[i].isalnum():
            i += 1
        while j > i and not raw[j - 1].isalnum():
            j -= 1
        if i < j:
            tokens.append(raw[i:j])
    return tokens


def filter_sentences(sentences: Iterable[list[str]], min_tokens: int = 5) -> Iterator[list[str]]:
    """Yield only sentences with at least `min_tokens` tokens, order preserved."""
    for sentence in sentences:
        if len(sentence) >= min_tokens:
            yield sentence


@dataclass
class Vocabulary:
    """Frequency-ordered word table.

    Words are sorted by count descending, ties broken by first occurrence,
    so "most frequent K" is always the index prefix [0, K). Immutable after
    construction and safe to share across workers.
    """

    words: list[str]
    counts: np.ndarray
    min_count: int = 1
    _index: dict = field(init=False, repr=False)
    _folded: dict | None = field(init=False, repr=False, default=None)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.words) != len(self.counts):
            raise ValueError("words and counts length mismatch")
        if self.min_count < 1:
            raise ValueError("min_count must be >= 1")
        if len(self.counts) and (self.counts < self.min_count).any():
            raise ValueError("every retained count must be >= min_count")
        if len(self.counts) > 1 and (np.diff(self.counts) > 0).any():
            raise ValueError("counts must be non-increasing")
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise ValueError("duplicate word in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    @property
    def total_tokens(self) -> int:
        return int(self.counts.sum())

    def get(self, word: str):
        """Index of `word`, or None."""
        return self._index.get(word)

    def resolve(self, word: str):
        """Index of `word` by exact match, then case-folded fallback.

        When several vocabulary words share a casefolded form, the most
        frequent one (lowest index) wins.
        """
        idx = self._index.get(word)
        if idx is not None:
            return idx
        if self._folded is None:
            folded = {}
            for i, w in enumerate(self.words):
                folded.setdefault(w.casefold(), i)
            self._folded = folded
        return self._folded.get(word.casefold())

    def frequency(self, index: int) -> float:
        """Relative corpus frequency of the word at `index`."""
        return float(self.counts[index]) / self.total_tokens

    def entries(self) -> Iterator[tuple[str, int]]:
        for i, w in enumerate(self.words):
            yield w, int(self.counts[i])

    def save(self, path):
        """Write the diagnostic dump: one "word<TAB>count" line per entry, index order."""
        with open(path, "w", encoding="utf-8") as f:
            for word, count in self.entries():
                f.write(f"{word}\t{count}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        words, counts = [], []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ParseError(path, lineno, "expected 'word<TAB>count'")
                try:
                    count = int(parts[1])
                except ValueError:
                    raise ParseError(path, lineno, f"bad count {parts[1]!r}") from None
                if count < 1:
                    raise ParseError(path, lineno, "count must be positive")
                if counts and count > counts[-1]:
                    raise ParseError(path, lineno, "counts must be non-increasing")
                words.append(parts[0])
                counts.append(count)
        min_count = min(counts) if counts else 1
        return cls(words, np.array(counts, dtype=np.int64), min_count=min_count)


def build_vocabulary(sentences: Iterable[list[str]], min_count: int) -> Vocabulary:
    """Count every token occurrence and keep words seen at least `min_count` times.

    The result is sorted by count descending; equal counts keep the order in
    which the words were first seen. An empty stream yields an empty
    vocabulary, not an error.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, int] = {}
    for sentence in sentences:
        for token in sentence:
            counts[token] = counts.get(token, 0) + 1
    # dicts preserve first-seen order, so a stable sort keeps the tie-break
    kept = [(w, c) for w, c in counts.items() if c >= min_count]
    kept.sort(key=lambda wc: -wc[1])
    words = [w for w, _ in kept]
    arr = np.array([c for _, c in kept], dtype=np.int64)
    return Vocabulary(words, arr, min_count=min_count)


def keep_probability(word_frequency: float, threshold: float) -> float:
    """Probability of keeping one occurrence of a word during subsampling.

    sqrt(threshold / frequency), clamped to [0, 1]: words at or below the
    threshold frequency are always kept.
    """
    if word_frequency <= 0.0 or word_frequency > 1.0:
        raise ValueError(f"word frequency must be in (0, 1], got {word_frequency}")
    if threshold <= 0.0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    return min(1.0, math.sqrt(threshold / word_frequency))


@dataclass
class NoiseTable:
    """Word indices laid out so sampling a slot uniformly draws from the
    smoothed unigram distribution count(w)^power / sum count(u)^power."""

    slots: np.ndarray
    power: float

    @property
    def size(self) -> int:
        return len(self.slots)

    def sample(self, rng: Lcg) -> int:
        return int(self.slots[rng.randint(self.size)])

    def draw_excluding(self, rng: Lcg, excluded: int) -> int:
        """Draw one index, resampling any draw equal to `excluded`."""
        while True:
            w = int(self.slots[rng.randint(self.size)])
            if w != excluded:
                return w


def build_noise_table(vocab: Vocabulary, power: float = 0.75, table_size: int = 10_000_000) -> NoiseTable:
    """Fill a table of `table_size` slots proportionally to count^power.

    Per-word slot fractions deviate from the analytic distribution by at
    most 1/table_size.
    """
    if len(vocab) == 0:
        raise ConfigError("cannot build a noise table for an empty vocabulary")
    if table_size < len(vocab):
        raise ConfigError(f"table_size {table_size} smaller than vocabulary size {len(vocab)}")
    probs = vocab.counts.astype(np.float64) ** power
    probs /= probs.sum()
    bounds = np.floor(np.cumsum(probs) * table_size + 0.5).astype(np.int64)
    bounds[-1] = table_size
    widths = np.diff(bounds, prepend=0)
    slots = np.repeat(np.arange(len(vocab), dtype=np.int32), widths)
    if len(vocab) >= 2 and widths.max() == table_size:
        # a single word owning every slot would make resampled negative
        # draws non-terminating
        raise ConfigError(
            "unigram distribution too skewed for this table size; increase table_size"
        )
    return NoiseTable(slots=slots, power=power)
