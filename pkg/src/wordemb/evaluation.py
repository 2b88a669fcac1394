"""Analogy and word-similarity evaluation.

Analogy questions "a is to b as c is to d" are solved by cosine retrieval
of unit(b) - unit(a) + unit(c) over unit-normalized vectors, with the
three query words excluded and the search restricted to the most frequent
`search_limit` words. Questions containing a word that cannot be resolved
within the limit are discarded from the accuracy denominator; the
with-OOV variant counts every discarded question as wrong.

Similarity benchmarks are scored as the Spearman rank correlation (x100)
between human judgments and cosine similarities; a word missing from the
store is replaced by the average vector of the ten least frequent
vocabulary words.
"""

import warnings
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .errors import ParseError
from .store import VectorStore, cosine

SEMANTIC = "semantic"
SYNTACTIC = "syntactic"
GROUPS = (SEMANTIC, SYNTACTIC)

DEFAULT_SEARCH_LIMIT = 300_000


class AnalogyQuestion(NamedTuple):
    a: str
    b: str
    c: str
    d: str


@dataclass
class Category:
    name: str
    group: str
    questions: list[AnalogyQuestion]

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}, got {self.group!r}")


@dataclass
class AnalogyCorpus:
    categories: list[Category]

    def __post_init__(self):
        names = [c.name for c in self.categories]
        if len(set(names)) != len(names):
            raise ValueError("duplicate category names")

    @property
    def total_questions(self) -> int:
        return sum(len(c.questions) for c in self.categories)


class SimilarityPair(NamedTuple):
    w1: str
    w2: str
    human_score: float


def expand_pairs(pairs) -> list[AnalogyQuestion]:
    """All n(n-1) ordered combinations of distinct pairs into questions.

    Pair i and pair j (i != j) yield the question (x_i, y_i, x_j, y_j);
    output is i-major, then j.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError(f"need at least 2 pairs to expand, got {len(pairs)}")
    if len(set(pairs)) != len(pairs):
        raise ValueError("pairs must be pairwise distinct")
    for x, y in pairs:
        if not x or not y:
            raise ValueError("pair words must be nonempty")
        if x == y:
            raise ValueError(f"pair words must differ, got ({x!r}, {y!r})")
    questions = []
    for i, (xi, yi) in enumerate(pairs):
        for j, (xj, yj) in enumerate(pairs):
            if i == j:
                continue
            questions.append(AnalogyQuestion(xi, yi, xj, yj))
    return questions


def _resolve_within(store: VectorStore, word: str, limit: int):
    idx = store.resolve(word)
    if idx is None or idx >= limit:
        return None
    return idx


def solve_analogy(store: VectorStore, question: AnalogyQuestion,
                  search_limit: int | None = None):
    """Predicted fourth word, or None when a, b, or c is out of vocabulary
    (or beyond the search limit)."""
    limit = len(store) if search_limit is None else min(search_limit, len(store))
    ia = _resolve_within(store, question.a, limit)
    ib = _resolve_within(store, question.b, limit)
    ic = _resolve_within(store, question.c, limit)
    if ia is None or ib is None or ic is None:
        return None
    unit = store.normalized
    target = unit[ib] - unit[ia] + unit[ic]
    hits = store.nearest(target, 1, search_limit=limit, exclude={ia, ib, ic})
    if not hits:
        return None
    return hits[0][0]


@dataclass
class CategoryResult:
    name: str
    group: str
    total: int
    answered: int
    correct: int

    @property
    def accuracy(self) -> float:
        """Percent correct over answered questions (0.0 when none answered)."""
        return 100.0 * self.correct / self.answered if self.answered else 0.0


@dataclass
class EvalReport:
    """Per-category accuracies plus question-weighted group aggregates."""

    categories: list[CategoryResult]
    search_limit: int = 0

    def _sums(self, group=None):
        rows = [c for c in self.categories if group is None or c.group == group]
        return (
            sum(c.correct for c in rows),
            sum(c.answered for c in rows),
            sum(c.total for c in rows),
        )

    def _accuracy(self, group=None) -> float:
        correct, answered, _ = self._sums(group)
        return 100.0 * correct / answered if answered else 0.0

    @property
    def semantic_acc(self) -> float:
        return self._accuracy(SEMANTIC)

    @property
    def syntactic_acc(self) -> float:
        return self._accuracy(SYNTACTIC)

    @property
    def all_acc(self) -> float:
        return self._accuracy()

    @property
    def all_acc_with_oov(self) -> float:
        """Accuracy over all questions, counting every OOV-discarded one as wrong."""
        correct, _, total = self._sums()
        return 100.0 * correct / total if total else 0.0

    @property
    def answered(self) -> int:
        return self._sums()[1]

    @property
    def total(self) -> int:
        return self._sums()[2]

    def format_table(self) -> str:
        width = max([len(c.name) for c in self.categories] + [len("ALL including OOV")]) + 2
        lines = [f"{'category':<{width}}{'accuracy':>10}{'answered':>10}{'total':>10}"]
        lines.append("-" * (width + 30))
        for group in GROUPS:
            rows = [c for c in self.categories if c.group == group]
            for c in rows:
                lines.append(f"{c.name:<{width}}{c.accuracy:>10.2f}{c.answered:>10}{c.total:>10}")
            if rows:
                lines.append("-" * (width + 30))
        for label, acc, group in (
            ("SEMANTIC", self.semantic_acc, SEMANTIC),
            ("SYNTACTIC", self.syntactic_acc, SYNTACTIC),
        ):
            _, answered, total = self._sums(group)
            lines.append(f"{label:<{width}}{acc:>10.2f}{answered:>10}{total:>10}")
        lines.append(f"{'ALL':<{width}}{self.all_acc:>10.2f}{self.answered:>10}{self.total:>10}")
        lines.append(
            f"{'ALL including OOV':<{width}}{self.all_acc_with_oov:>10.2f}"
            f"{self.total:>10}{self.total:>10}"
        )
        return "\n".join(lines)

    def to_keyvalues(self) -> list[str]:
        lines = []
        for c in self.categories:
            lines.append(f"category.{c.name}.accuracy={c.accuracy:.2f}")
            lines.append(f"category.{c.name}.answered={c.answered}")
            lines.append(f"category.{c.name}.total={c.total}")
        lines.append(f"semantic_acc={self.semantic_acc:.2f}")
        lines.append(f"syntactic_acc={self.syntactic_acc:.2f}")
        lines.append(f"all_acc={self.all_acc:.2f}")
        lines.append(f"all_acc_with_oov={self.all_acc_with_oov:.2f}")
        lines.append(f"answered={self.answered}")
        lines.append(f"total={self.total}")
        lines.append(f"search_limit={self.search_limit}")
        return lines


def _score_questions(store: VectorStore, questions, limit: int) -> tuple[int, int]:
    """(answered, correct) over a slice of questions."""
    answered = 0
    correct = 0
    for q in questions:
        if _resolve_within(store, q.d, limit) is None:
            continue
        prediction = solve_analogy(store, q, search_limit=limit)
        if prediction is None:
            continue
        answered += 1
        if prediction == q.d or prediction.casefold() == q.d.casefold():
            correct += 1
    return answered, correct


def evaluate_analogies(store: VectorStore, corpus: AnalogyCorpus,
                       search_limit: int = DEFAULT_SEARCH_LIMIT,
                       workers: int = 1) -> EvalReport:
    """Solve every question and aggregate per-category and group accuracies.

    A question is discarded (answered count excluded) when any of its four
    words cannot be resolved within the search limit; a prediction is
    correct when it equals d exactly or case-folded. Questions may be
    sharded across `workers` threads; the merged counts are
    order-independent sums, so the report does not depend on workers.
    """
    if corpus.total_questions == 0:
        raise ValueError("analogy corpus contains no questions")
    limit = min(search_limit, len(store))
    pool = None
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        pool = ThreadPoolExecutor(max_workers=workers)
    try:
        results = []
        for category in corpus.categories:
            if pool is None or len(category.questions) < 2 * workers:
                answered, correct = _score_questions(store, category.questions, limit)
            else:
                chunk = (len(category.questions) + workers - 1) // workers
                slices = [category.questions[i:i + chunk]
                          for i in range(0, len(category.questions), chunk)]
                answered = correct = 0
                for a, c in pool.map(lambda qs: _score_questions(store, qs, limit), slices):
                    answered += a
                    correct += c
            results.append(CategoryResult(
                name=category.name, group=category.group,
                total=len(category.questions), answered=answered, correct=correct,
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    return EvalReport(categories=results, search_limit=limit)


def oov_fallback_vector(store: VectorStore) -> np.ndarray:
    """Mean raw vector of the 10 least frequent words (all words if V < 10)."""
    if len(store) == 0:
        raise ValueError("empty store has no fallback vector")
    tail = min(10, len(store))
    return store.vectors[len(store) - tail:].mean(axis=0)


def _average_ranks(values) -> np.ndarray:
    """1-based ranks; runs of equal values all get the run's average rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Spearman rank correlation: Pearson correlation of average-rank vectors."""
    xs = list(xs)
    ys = list(ys)
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValueError("need at least 2 observations")
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    vx = float(rx @ rx)
    vy = float(ry @ ry)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("correlation undefined: zero variance in ranks")
    return float(rx @ ry) / np.sqrt(vx * vy)


class PairDetail(NamedTuple):
    w1: str
    w2: str
    human_score: float
    model_score: float
    w1_oov: bool
    w2_oov: bool


@dataclass
class SimilarityReport:
    score: float                      # spearman rho x 100
    details: list[PairDetail] = field(default_factory=list)

    @property
    def oov_pairs(self) -> int:
        return sum(1 for d in self.details if d.w1_oov or d.w2_oov)


def evaluate_similarity(store: VectorStore, pairs: Iterable[SimilarityPair]) -> SimilarityReport:
    """Spearman correlation (x100) of human scores against vector cosines.

    Absent words are represented by the 10-least-frequent-words fallback
    vector, so a pair with both words missing scores cosine 1 and is still
    included.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no similarity pairs given")
    fallback = oov_fallback_vector(store)
    details = []
    for pair in pairs:
        i1 = store.resolve(pair.w1)
        i2 = store.resolve(pair.w2)
        v1 = store.vectors[i1] if i1 is not None else fallback
        v2 = store.vectors[i2] if i2 is not None else fallback
        details.append(PairDetail(
            w1=pair.w1, w2=pair.w2, human_score=pair.human_score,
            model_score=cosine(v1, v2), w1_oov=i1 is None, w2_oov=i2 is None,
        ))
    rho = spearman([d.human_score for d in details], [d.model_score for d in details])
    return SimilarityReport(score=rho * 100.0, details=details)


# ---------------------------------------------------------------------------
# file formats


def load_analogy_corpus(path, groups_path=None) -> AnalogyCorpus:
    """Parse a corpus file: ": name" category headers, then four-word lines.

    Group membership comes from the sidecar mapping file
    ("name<TAB>semantic|syntactic"); without one, every category defaults
    to syntactic with a warning.
    """
    groups = {}
    if groups_path is not None:
        groups = _load_groups(groups_path)
    raw: list[tuple[str, list[AnalogyQuestion]]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith(": "):
                name = line[2:].strip()
                if not name:
                    raise ParseError(path, lineno, "empty category name")
                if any(name == seen for seen, _ in raw):
                    raise ParseError(path, lineno, f"duplicate category {name!r}")
                raw.append((name, []))
                continue
            words = line.split()
            if len(words) != 4:
                raise ParseError(path, lineno, f"expected 4 words, got {len(words)}")
            if not raw:
                raise ParseError(path, lineno, "question line before any ': category' header")
            if words[0] == words[1] or words[2] == words[3]:
                raise ParseError(path, lineno, "question words a,b and c,d must differ")
            raw[-1][1].append(AnalogyQuestion(*words))
    categories = []
    for name, questions in raw:
        group = groups.get(name)
        if group is None:
            if groups_path is None:
                warnings.warn(
                    f"no group mapping given; category {name!r} defaults to syntactic",
                    stacklevel=2,
                )
            else:
                warnings.warn(
                    f"category {name!r} missing from {groups_path}; defaults to syntactic",
                    stacklevel=2,
                )
            group = SYNTACTIC
        categories.append(Category(name=name, group=group, questions=questions))
    return AnalogyCorpus(categories=categories)


def _load_groups(path) -> dict:
    groups = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, "expected 'name<TAB>semantic|syntactic'")
            name, group = parts[0].strip(), parts[1].strip()
            if group not in GROUPS:
                raise ParseError(path, lineno, f"unknown group {group!r}")
            groups[name] = group
    return groups


def save_analogy_corpus(corpus: AnalogyCorpus, path, groups_path=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for category in corpus.categories:
            f.write(f": {category.name}\n")
            for q in category.questions:
                f.write(f"{q.a} {q.b} {q.c} {q.d}\n")
    if groups_path is not None:
        with open(groups_path, "w", encoding="utf-8", newline="\n") as f:
            for category in corpus.categories:
                f.write(f"{category.name}\t{category.group}\n")


def load_similarity_pairs(path, scale_min: float = 0.0, scale_max: float = 10.0) -> list[SimilarityPair]:
    """Parse "w1<TAB>w2<TAB>score" lines, checking scores against the scale."""
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected 'w1<TAB>w2<TAB>score'")
            try:
                score = float(parts[2])
            except ValueError:
                raise ParseError(path, lineno, f"bad score {parts[2]!r}") from None
            if not (scale_min <= score <= scale_max):
                raise ParseError(
                    path, lineno,
                    f"score {score} outside declared scale [{scale_min}, {scale_max}]",
                )
            pairs.append(SimilarityPair(parts[0].strip(), parts[1].strip(), score))
    return pairs


def load_pairs(path) -> list[tuple[str, str]]:
    """Parse a pair-list file: "x<TAB>y" lines, '#' comments ignored."""
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ParseError(path, lineno, "expected 'x<TAB>y'")
            pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs
