"""Build and validate analogy corpora from category pair lists.

A corpus is assembled from CategorySpec entries (name, group, word pairs);
each category is expanded to its n(n-1) ordered pair combinations. The
validator reports per-category vocabulary coverage so OOV loss can be
inspected before evaluating.
"""

from dataclasses import dataclass

from .corpus import Vocabulary
from .errors import ParseError
from .evaluation import GROUPS, AnalogyCorpus, Category, expand_pairs, load_pairs


@dataclass
class CategorySpec:
    name: str
    group: str
    pairs: list[tuple[str, str]]

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}, got {self.group!r}")


@dataclass
class BuildStats:
    per_category: list[tuple[str, str, int, int]]   # name, group, pairs, questions

    @property
    def semantic_questions(self) -> int:
        return sum(q for _, g, _, q in self.per_category if g == "semantic")

    @property
    def syntactic_questions(self) -> int:
        return sum(q for _, g, _, q in self.per_category if g == "syntactic")

    @property
    def total_questions(self) -> int:
        return sum(q for _, _, _, q in self.per_category)

    def to_keyvalues(self) -> list[str]:
        lines = []
        for name, group, pairs, questions in self.per_category:
            lines.append(f"category.{name}.group={group}")
            lines.append(f"category.{name}.pairs={pairs}")
            lines.append(f"category.{name}.questions={questions}")
        lines.append(f"semantic_questions={self.semantic_questions}")
        lines.append(f"syntactic_questions={self.syntactic_questions}")
        lines.append(f"total_questions={self.total_questions}")
        return lines


def build_corpus(specs) -> tuple[AnalogyCorpus, BuildStats]:
    """Expand every category spec; question totals are exactly n(n-1) each."""
    specs = list(specs)
    if not specs:
        raise ValueError("no category specs given")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        duplicates = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate category names: {', '.join(duplicates)}")
    categories = []
    stats = []
    for spec in specs:
        questions = expand_pairs(spec.pairs)
        categories.append(Category(name=spec.name, group=spec.group, questions=questions))
        stats.append((spec.name, spec.group, len(spec.pairs), len(questions)))
    return AnalogyCorpus(categories=categories), BuildStats(per_category=stats)


@dataclass
class CategoryCoverage:
    name: str
    total: int
    covered: int
    oov_words: dict    # word -> number of question slots it occupies

    @property
    def coverage_pct(self) -> float:
        return 100.0 * self.covered / self.total if self.total else 0.0


@dataclass
class CoverageReport:
    categories: list[CategoryCoverage]

    @property
    def total(self) -> int:
        return sum(c.total for c in self.categories)

    @property
    def covered(self) -> int:
        return sum(c.covered for c in self.categories)

    def to_keyvalues(self) -> list[str]:
        lines = []
        for c in self.categories:
            lines.append(f"category.{c.name}.total={c.total}")
            lines.append(f"category.{c.name}.covered={c.covered}")
            lines.append(f"category.{c.name}.coverage={c.coverage_pct:.2f}")
        lines.append(f"total={self.total}")
        lines.append(f"covered={self.covered}")
        return lines


def validate_corpus(corpus: AnalogyCorpus, vocab: Vocabulary,
                    search_limit: int | None = None) -> CoverageReport:
    """Per-category counts of questions whose four words all resolve within
    the search limit, plus how often each missing word occurs."""
    limit = len(vocab) if search_limit is None else min(search_limit, len(vocab))
    out = []
    for category in corpus.categories:
        covered = 0
        oov: dict[str, int] = {}
        for q in category.questions:
            hit = True
            for word in q:
                idx = vocab.resolve(word)
                if idx is None or idx >= limit:
                    oov[word] = oov.get(word, 0) + 1
                    hit = False
            if hit:
                covered += 1
        out.append(CategoryCoverage(
            name=category.name, total=len(category.questions),
            covered=covered, oov_words=oov,
        ))
    return CoverageReport(categories=out)


def load_manifest(path) -> list[tuple[str, str, str]]:
    """Parse a build manifest: "name<TAB>group<TAB>path" lines."""
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected 'name<TAB>group<TAB>path'")
            name, group, pair_path = (p.strip() for p in parts)
            if group not in GROUPS:
                raise ParseError(path, lineno, f"unknown group {group!r}")
            entries.append((name, group, pair_path))
    return entries


def specs_from_manifest(path) -> list[CategorySpec]:
    """Load every pair list referenced by a manifest into CategorySpec objects."""
    import os

    specs = []
    base = os.path.dirname(os.fspath(path))
    for name, group, pair_path in load_manifest(path):
        resolved = pair_path if os.path.isabs(pair_path) else os.path.join(base, pair_path)
        specs.append(CategorySpec(name=name, group=group, pairs=load_pairs(resolved)))
    return specs
