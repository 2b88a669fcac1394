"""Vector store: cosine retrieval over trained embeddings and the text
interchange format (header "V dim", then "word v1 ... vdim" per line)."""

import math

import numpy as np

from .corpus import Vocabulary
from .errors import ParseError


def cosine(u, v) -> float:
    """u.v / (|u||v|); 0.0 if either norm is zero."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


class VectorStore:
    """Vocabulary plus a dense V x dim embedding matrix.

    Immutable after construction; the unit-normalized view is built lazily
    and cached. Vocabulary order is frequency-descending, so restricting a
    search to the most frequent K words is the row prefix [0, K).
    """

    def __init__(self, vocab: Vocabulary, vectors):
        vectors = np.asarray(vectors)
        if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
            raise ValueError(f"expected ({len(vocab)}, dim) matrix, got {vectors.shape}")
        self.vocab = vocab
        self.vectors = vectors
        self._normalized = None

    def __len__(self) -> int:
        return len(self.vocab)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def normalized(self) -> np.ndarray:
        """Unit-row view of the matrix; zero rows stay zero."""
        if self._normalized is None:
            norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
            safe = np.where(norms == 0.0, 1.0, norms)
            self._normalized = self.vectors / safe
        return self._normalized

    def resolve(self, word: str):
        """Row index for `word` (exact, then case-folded), or None."""
        return self.vocab.resolve(word)

    def word_vector(self, word: str) -> np.ndarray:
        idx = self.resolve(word)
        if idx is None:
            raise KeyError(word)
        return self.vectors[idx]

    def nearest(self, query, k: int, search_limit: int | None = None, exclude=()) -> list[tuple[str, float]]:
        """Top-k rows of the normalized matrix by cosine to `query`.

        Scans rows [0, search_limit), skips excluded indices, breaks cosine
        ties in favor of the lower index (more frequent word).
        """
        if k <= 0:
            return []
        query = np.asarray(query)
        if query.shape != (self.dim,):
            raise ValueError(f"query must have shape ({self.dim},), got {query.shape}")
        limit = len(self) if search_limit is None else min(search_limit, len(self))
        if limit <= 0:
            return []
        qnorm = math.sqrt(float(query @ query))
        if qnorm == 0.0:
            scores = np.zeros(limit, dtype=self.normalized.dtype)
        else:
            scores = self.normalized[:limit] @ (query / qnorm)
        order = np.argsort(-scores, kind="stable")
        exclude = set(exclude)
        out = []
        for i in order:
            if int(i) in exclude:
                continue
            out.append((self.vocab.words[int(i)], float(scores[i])))
            if len(out) == k:
                break
        return out

    def save_text(self, path):
        """Write the text format with enough digits to round-trip the dtype."""
        digits = 17 if self.vectors.dtype == np.float64 else 9
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{len(self)} {self.dim}\n")
            for i, word in enumerate(self.vocab.words):
                if any(ch.isspace() for ch in word):
                    raise ValueError(f"word {word!r} contains whitespace and cannot be saved")
                values = " ".join(format(float(x), f".{digits}g") for x in self.vectors[i])
                f.write(f"{word} {values}\n")

    @classmethod
    def load_text(cls, path, dtype=np.float32) -> "VectorStore":
        """Parse the text format.

        Counts are not stored in the format, so they are reconstructed as
        V - rank, which preserves the frequency ordering.
        """
        with open(path, encoding="utf-8") as f:
            header = f.readline()
            if not header:
                raise ParseError(path, 1, "empty file, expected 'V dim' header")
            parts = header.split()
            if len(parts) != 2:
                raise ParseError(path, 1, f"expected 'V dim' header, got {header.strip()!r}")
            try:
                n_words, dim = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(path, 1, f"non-integer header {header.strip()!r}") from None
            if n_words < 0 or dim < 1:
                raise ParseError(path, 1, f"bad header dimensions {header.strip()!r}")
            words: list[str] = []
            seen: set[str] = set()
            vectors = np.empty((n_words, dim), dtype=dtype)
            row = 0
            for lineno, line in enumerate(f, start=2):
                if not line.strip():
                    continue
                if row >= n_words:
                    raise ParseError(path, lineno, f"header declared {n_words} words, found more")
                fields = line.split()
                if len(fields) != dim + 1:
                    raise ParseError(
                        path, lineno, f"expected word + {dim} values, got {len(fields)} fields"
                    )
                word = fields[0]
                if word in seen:
                    raise ParseError(path, lineno, f"duplicate word {word!r}")
                seen.add(word)
                try:
                    vectors[row] = [float(x) for x in fields[1:]]
                except ValueError:
                    raise ParseError(path, lineno, "non-numeric vector component") from None
                words.append(word)
                row += 1
            if row != n_words:
                raise ParseError(path, row + 2, f"header declared {n_words} words, found {row}")
        counts = np.arange(n_words, 0, -1, dtype=np.int64)
        return cls(Vocabulary(words, counts, min_count=1), vectors)
