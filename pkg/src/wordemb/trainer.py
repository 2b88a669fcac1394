"""CBOW and Skip-gram training with negative sampling, plus the hashed
character n-gram (subword) variant.

The step functions here are the reference semantics: within one
negative-sampling step, every dot product and gradient is computed against
the step's entry values and the update is applied once, so the applied
parameter change equals -lr times the analytic gradient of the step loss.
Across steps, updates are sequential. The compiled kernels in `fast`
replay the same decision stream (see `rng`) with the same arithmetic and
are used automatically for full training runs when numba is importable.
"""

import threading
import time
from dataclasses import dataclass, fields, replace
from typing import Iterable

import numpy as np

from .corpus import NoiseTable, Vocabulary, build_noise_table, keep_probability
from .errors import ConfigError, TrainingDivergedError
from .rng import Lcg, derive_state
from .store import VectorStore

MODES = ("cbow", "skipgram")

# the learning rate never decays below this fraction of its initial value
LR_FLOOR = 1e-4

DEFAULT_TABLE_SIZE = 10_000_000

_TRUE_WORDS = {"true", "1", "yes", "on"}
_FALSE_WORDS = {"false", "0", "no", "off"}


@dataclass
class ModelConfig:
    """All training hyperparameters.

    `initial_lr` left as None resolves to the mode's conventional default
    (0.05 for cbow, 0.025 for skipgram). `minn`, `maxn` and `buckets` only
    matter when `subword` is enabled.
    """

    mode: str = "cbow"
    subword: bool = False
    dim: int = 300
    window: int = 5
    negatives: int = 5
    initial_lr: float | None = None
    epochs: int = 5
    min_count: int = 5
    subsample_t: float = 1e-4
    minn: int = 3
    maxn: int = 6
    buckets: int = 2_000_000
    seed: int = 1
    workers: int = 1

    def resolved_lr(self) -> float:
        if self.initial_lr is not None:
            return self.initial_lr
        return 0.025 if self.mode == "skipgram" else 0.05

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if self.negatives < 1:
            raise ConfigError("negatives must be >= 1")
        if self.resolved_lr() <= 0:
            raise ConfigError("initial_lr must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")
        if self.subsample_t <= 0:
            raise ConfigError("subsample_t must be positive")
        if self.subword:
            if not (1 <= self.minn <= self.maxn):
                raise ConfigError(f"need 1 <= minn <= maxn, got minn={self.minn} maxn={self.maxn}")
            if self.buckets < 1:
                raise ConfigError("buckets must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_file(self, path) -> None:
        """Write as flat key=value lines (initial_lr written resolved)."""
        with open(path, "w", encoding="utf-8") as f:
            for fld in fields(self):
                value = getattr(self, fld.name)
                if fld.name == "initial_lr":
                    value = self.resolved_lr()
                if isinstance(value, bool):
                    value = "true" if value else "false"
                f.write(f"{fld.name}={value}\n")

    @classmethod
    def from_file(cls, path) -> "ModelConfig":
        """Parse key=value lines; an unknown key is an error."""
        return cls().with_overrides(read_config_file(path))

    def with_overrides(self, values: dict) -> "ModelConfig":
        """New config with (string-valued) overrides applied and validated."""
        known = {fld.name for fld in fields(self)}
        parsed = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            parsed[key] = _parse_config_value(key, raw)
        cfg = replace(self, **parsed)
        cfg.validate()
        return cfg


def read_config_file(path) -> dict:
    """Raw key=value pairs from a config file ('#' comments ignored)."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    return values


def _parse_config_value(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if key == "mode":
        return raw
    if key == "subword":
        word = raw.lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
        raise ConfigError(f"bad boolean for {key}: {raw!r}")
    if key in ("initial_lr", "subsample_t"):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"bad number for {key}: {raw!r}") from None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"bad integer for {key}: {raw!r}") from None


# Conventional model names mapped onto (mode, subword) pairs.
MODEL_NAMES = {
    "cbow": ("cbow", False),
    "skipgram": ("skipgram", False),
    "fasttext-skip": ("skipgram", True),
    "fasttext-cbow": ("cbow", True),
}


@dataclass
class ParameterMatrices:
    """input_vectors: (V + B) x dim, rows 0..V-1 for words and rows V.. for
    n-gram buckets (B = 0 without subword); output_vectors: V x dim."""

    input_vectors: np.ndarray
    output_vectors: np.ndarray


def init_parameters(config: ModelConfig, vocab_size: int, dtype=np.float32) -> ParameterMatrices:
    """Input rows i.i.d. uniform in [-0.5/dim, +0.5/dim], outputs zero.

    Fully determined by config.seed.
    """
    if vocab_size < 1:
        raise ValueError("vocab_size must be >= 1")
    dtype = np.dtype(dtype).type
    buckets = config.buckets if config.subword else 0
    gen = np.random.default_rng(config.seed)
    shape = (vocab_size + buckets, config.dim)
    if dtype == np.float32:
        raw = gen.random(shape, dtype=np.float32)
    else:
        raw = gen.random(shape).astype(dtype)
    inputs = (raw - dtype(0.5)) / dtype(config.dim)
    outputs = np.zeros((vocab_size, config.dim), dtype=dtype)
    return ParameterMatrices(input_vectors=inputs, output_vectors=outputs)


def extract_ngrams(word: str, minn: int, maxn: int) -> list[str]:
    """Character n-grams of the boundary-wrapped word "<word>".

    Emits every n-gram of length minn..maxn over Unicode scalar values,
    except the one equal to the full wrapped form, ordered by start
    position and then length.
    """
    if not (1 <= minn <= maxn):
        raise ValueError(f"need 1 <= minn <= maxn, got {minn}..{maxn}")
    wrapped = "<" + word + ">"
    total = len(wrapped)
    grams = []
    for start in range(total):
        for n in range(minn, maxn + 1):
            end = start + n
            if end > total:
                break
            if start == 0 and end == total:
                continue
            grams.append(wrapped[start:end])
    return grams


FNV_OFFSET = 2166136261
FNV_PRIME = 16777619


def hash_ngram(ngram: str, buckets: int) -> int:
    """FNV-1a over the UTF-8 bytes with 32-bit wrapping, reduced mod buckets."""
    if buckets < 1:
        raise ValueError("buckets must be >= 1")
    h = FNV_OFFSET
    for byte in ngram.encode("utf-8"):
        h ^= byte
        h = (h * FNV_PRIME) & 0xFFFFFFFF
    return h % buckets


class SubwordIndex:
    """Precomputed n-gram bucket rows per vocabulary word.

    Row ids are offset by V so they index input_vectors directly;
    rows[offsets[w]:offsets[w+1]] are word w's buckets in extract order.
    """

    def __init__(self, vocab: Vocabulary, config: ModelConfig):
        offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
        rows: list[int] = []
        base = len(vocab)
        for i, word in enumerate(vocab.words):
            for ngram in extract_ngrams(word, config.minn, config.maxn):
                rows.append(base + hash_ngram(ngram, config.buckets))
            offsets[i + 1] = len(rows)
        self.rows = np.array(rows, dtype=np.int64)
        self.offsets = offsets

    def rows_for(self, word_index: int) -> np.ndarray:
        return self.rows[self.offsets[word_index]:self.offsets[word_index + 1]]

    @property
    def max_ngrams(self) -> int:
        if len(self.offsets) < 2:
            return 0
        return int(np.diff(self.offsets).max())


def lr_schedule(initial_lr: float, progress: float) -> float:
    """Linear decay with a floor: initial_lr * max(1 - progress, 1e-4)."""
    return initial_lr * max(1.0 - progress, LR_FLOOR)


def word_representation(word: int, params: ParameterMatrices, config: ModelConfig,
                        vocab: Vocabulary | None = None) -> np.ndarray:
    """Vector representing one vocabulary word.

    Without subword this is a copy of the word's input row. With subword it
    is the mean of the word row and its n-gram bucket rows; a word with no
    extracted n-grams falls back to the raw row. The accumulation order is
    fixed (word row, then n-grams in extract order) so recomposition from
    parts is bit-for-bit reproducible.
    """
    if not config.subword:
        return params.input_vectors[word].copy()
    if vocab is None:
        raise ValueError("vocab is required to compose subword representations")
    base = params.output_vectors.shape[0]
    acc = params.input_vectors[word].copy()
    grams = extract_ngrams(vocab.words[word], config.minn, config.maxn)
    for ngram in grams:
        acc += params.input_vectors[base + hash_ngram(ngram, config.buckets)]
    acc /= acc.dtype.type(1 + len(grams))
    return acc


def negative_sampling_step(center_repr: np.ndarray, target_word: int, noise_words,
                           params: ParameterMatrices, lr: float,
                           input_rows=None, input_weights=None) -> float:
    """One SGD step on the negative-sampling objective.

    loss = -ln s(u.v_target) - sum over noise of ln s(-u.v_noise), with
    u = center_repr and v rows of output_vectors. Applies the update to the
    touched output rows and distributes the gradient on u to `input_rows`
    scaled by `input_weights` (the composition weights that built u).
    Callers guarantee noise_words excludes the target. Returns the
    pre-update loss.
    """
    out = params.output_vectors
    rows = np.empty(len(noise_words) + 1, dtype=np.int64)
    rows[0] = target_word
    rows[1:] = noise_words
    u = np.asarray(center_repr, dtype=np.float64)
    old_rows = out[rows].astype(np.float64)
    dots = old_rows @ u
    if not np.all(np.isfinite(dots)):
        raise TrainingDivergedError("non-finite dot product in negative-sampling step")
    # numerically stable sigmoid / softplus
    e = np.exp(-np.abs(dots))
    log1pe = np.log1p(e)
    positive = dots >= 0
    sigmoid = np.where(positive, 1.0 / (1.0 + e), e / (1.0 + e))
    softplus_pos = np.where(positive, dots + log1pe, log1pe)    # ln(1 + e^dot)
    softplus_neg = np.where(positive, log1pe, -dots + log1pe)   # ln(1 + e^-dot)
    loss = float(softplus_neg[0] + softplus_pos[1:].sum())
    labels = np.zeros(len(rows))
    labels[0] = 1.0
    coeffs = (labels - sigmoid) * lr                  # -lr * dL/d(dot)
    grad_u = coeffs @ old_rows                        # -lr * dL/du, pre-update values
    np.add.at(out, rows, coeffs[:, None] * u[None, :])
    if input_rows is not None:
        idx = np.asarray(input_rows, dtype=np.int64)
        weights = np.asarray(input_weights, dtype=np.float64)
        np.add.at(params.input_vectors, idx, weights[:, None] * grad_u[None, :])
    return loss


def _composition(word: int, subwords, share: float):
    """Rows and weights composing one word's input representation, where the
    whole word contributes `share` of the final vector."""
    if subwords is None:
        return [word], [share]
    ngram_rows = subwords.rows_for(word)
    weight = share / (1 + len(ngram_rows))
    rows = [word] + [int(r) for r in ngram_rows]
    return rows, [weight] * len(rows)


def _compose_vector(rows, weights, inputs) -> np.ndarray:
    idx = np.asarray(rows, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    return w @ inputs[idx].astype(np.float64)


def _draw_negatives(noise: NoiseTable, rng: Lcg, count: int, target: int) -> list[int]:
    return [noise.draw_excluding(rng, target) for _ in range(count)]


def cbow_step(sentence, position: int, params: ParameterMatrices, config: ModelConfig,
              rng: Lcg, noise: NoiseTable, lr: float | None = None,
              subwords: "SubwordIndex | None" = None) -> float:
    """Predict the center word from the mean of its context representations.

    The window half-width is drawn uniformly from 1..config.window and the
    context is truncated at sentence edges. An empty context (single-word
    sentence) skips the step with loss 0. The gradient on the combined
    representation is shared among all contributing rows according to
    their composition weights.
    """
    if lr is None:
        lr = config.resolved_lr()
    b = 1 + rng.randint(config.window)
    lo = max(0, position - b)
    hi = min(len(sentence), position + b + 1)
    context = [sentence[i] for i in range(lo, hi) if i != position]
    if not context:
        return 0.0
    share = 1.0 / len(context)
    rows: list[int] = []
    weights: list[float] = []
    sub = subwords if config.subword else None
    for word in context:
        r, w = _composition(word, sub, share)
        rows.extend(r)
        weights.extend(w)
    center_repr = _compose_vector(rows, weights, params.input_vectors)
    negatives = _draw_negatives(noise, rng, config.negatives, sentence[position])
    return negative_sampling_step(center_repr, sentence[position], negatives, params, lr,
                                  input_rows=rows, input_weights=weights)


def skipgram_step(sentence, position: int, params: ParameterMatrices, config: ModelConfig,
                  rng: Lcg, noise: NoiseTable, lr: float | None = None,
                  subwords: "SubwordIndex | None" = None) -> float:
    """Predict each context word from the center word's representation.

    Runs one negative-sampling step per context word within the sampled
    window; the center representation is recomposed before each step so it
    sees earlier updates. Returns the summed loss.
    """
    if lr is None:
        lr = config.resolved_lr()
    b = 1 + rng.randint(config.window)
    lo = max(0, position - b)
    hi = min(len(sentence), position + b + 1)
    center = sentence[position]
    sub = subwords if config.subword else None
    total = 0.0
    for cpos in range(lo, hi):
        if cpos == position:
            continue
        target = sentence[cpos]
        rows, weights = _composition(center, sub, 1.0)
        center_repr = _compose_vector(rows, weights, params.input_vectors)
        negatives = _draw_negatives(noise, rng, config.negatives, target)
        total += negative_sampling_step(center_repr, target, negatives, params, lr,
                                        input_rows=rows, input_weights=weights)
    return total


@dataclass
class EncodedCorpus:
    """Corpus flattened to vocabulary indices for the training loops."""

    tokens: np.ndarray        # int32, in-vocabulary token ids
    offsets: np.ndarray       # int64; sentence s is tokens[offsets[s]:offsets[s+1]]
    cum_tokens: np.ndarray    # int64; tokens preceding sentence s within one epoch

    @property
    def n_sentences(self) -> int:
        return len(self.offsets) - 1

    @property
    def total_tokens(self) -> int:
        return int(self.offsets[-1])

    @property
    def max_sentence(self) -> int:
        if self.n_sentences == 0:
            return 0
        return int(np.diff(self.offsets).max())


def encode_corpus(sentences: Iterable[list[str]], vocab: Vocabulary) -> EncodedCorpus:
    """Map sentences to index arrays, dropping out-of-vocabulary tokens."""
    ids: list[int] = []
    offsets = [0]
    lookup = {w: i for i, w in enumerate(vocab.words)}
    for sentence in sentences:
        for token in sentence:
            idx = lookup.get(token)
            if idx is not None:
                ids.append(idx)
        offsets.append(len(ids))
    offs = np.array(offsets, dtype=np.int64)
    return EncodedCorpus(
        tokens=np.array(ids, dtype=np.int32),
        offsets=offs,
        cum_tokens=offs[:-1].copy(),
    )


def _keep_probs(vocab: Vocabulary, threshold: float) -> np.ndarray:
    total = vocab.total_tokens
    return np.array(
        [keep_probability(int(c) / total, threshold) for c in vocab.counts],
        dtype=np.float64,
    )


def _worker_bounds(enc: EncodedCorpus, workers: int) -> list[tuple[int, int]]:
    """Split sentences into per-worker ranges of roughly equal token counts."""
    n = enc.n_sentences
    if workers <= 1 or n <= 1:
        return [(0, n)]
    targets = np.linspace(0, enc.total_tokens, workers + 1)[1:-1]
    cuts = np.searchsorted(enc.offsets[1:], targets, side="left") + 1
    bounds = []
    start = 0
    for cut in list(int(c) for c in cuts) + [n]:
        cut = max(start, min(cut, n))
        bounds.append((start, cut))
        start = cut
    return bounds


def _train_chunk_pure(enc: EncodedCorpus, params, noise, keep, config, subwords,
                      epoch: int, worker: int, s_lo: int, s_hi: int):
    """Reference training loop for one sentence range; decision-for-decision
    equivalent to fast.train_chunk."""
    rng = Lcg(derive_state(config.seed, epoch, worker))
    step = cbow_step if config.mode == "cbow" else skipgram_step
    initial_lr = config.resolved_lr()
    denom = float(config.epochs) * float(enc.total_tokens)
    total_loss = 0.0
    positions = 0
    for s in range(s_lo, s_hi):
        progress = (float(epoch) * float(enc.total_tokens) + float(enc.cum_tokens[s])) / denom
        lr = lr_schedule(initial_lr, progress)
        reduced = []
        for i in range(int(enc.offsets[s]), int(enc.offsets[s + 1])):
            w = int(enc.tokens[i])
            p = keep[w]
            if p < 1.0 and rng.uniform() >= p:
                continue
            reduced.append(w)
        active = len(reduced) >= 2
        for pos in range(len(reduced)):
            try:
                total_loss += step(reduced, pos, params, config, rng, noise,
                                   lr=lr, subwords=subwords)
            except TrainingDivergedError as err:
                raise TrainingDivergedError(
                    f"{err} (worker {worker}, position {positions})"
                ) from None
            if active:
                positions += 1
    return total_loss, positions


def _load_kernel():
    try:
        from .fast import train_chunk
    except Exception:
        return None
    return train_chunk


def _export_vectors(params: ParameterMatrices, config: ModelConfig, vocab: Vocabulary,
                    subwords: "SubwordIndex | None") -> np.ndarray:
    """word_representation for every vocabulary word, same arithmetic order."""
    n = len(vocab)
    if not config.subword:
        return params.input_vectors[:n].copy()
    inp = params.input_vectors
    out = np.empty((n, config.dim), dtype=inp.dtype)
    for i in range(n):
        acc = inp[i].copy()
        rows = subwords.rows_for(i)
        for r in rows:
            acc += inp[r]
        acc /= acc.dtype.type(1 + len(rows))
        out[i] = acc
    return out


def train(corpus: Iterable[list[str]], vocab: Vocabulary, config: ModelConfig,
          log=None, force_pure: bool = False) -> VectorStore:
    """Run the full training loop and return the trained vectors.

    `corpus` is an iterable of token lists produced by the same
    preprocessing rules the vocabulary was built with. With workers=1 the
    run is fully deterministic under a fixed seed; with more workers the
    parameter matrices are updated lock-free and results vary run to run.
    Per-epoch progress (current lr, mean loss, tokens/s) is written to
    `log` when given; the returned store carries the per-epoch mean losses
    as `train_losses`.
    """
    config.validate()
    if len(vocab) < 2:
        raise ConfigError("vocabulary must contain at least 2 words to train")
    enc = encode_corpus(corpus, vocab)
    if enc.total_tokens == 0:
        raise ConfigError("no trainable tokens: corpus is empty under this vocabulary")
    params = init_parameters(config, len(vocab))
    noise = build_noise_table(vocab, table_size=max(DEFAULT_TABLE_SIZE, len(vocab)))
    subwords = SubwordIndex(vocab, config) if config.subword else None
    keep = _keep_probs(vocab, config.subsample_t)
    bounds = _worker_bounds(enc, config.workers)
    kernel = None if force_pure else _load_kernel()

    losses = []
    for epoch in range(config.epochs):
        t_start = time.perf_counter()
        if kernel is not None:
            epoch_loss, epoch_positions = _run_epoch_fast(
                kernel, enc, params, noise, keep, config, subwords, epoch, bounds)
        else:
            epoch_loss = 0.0
            epoch_positions = 0
            for worker, (lo, hi) in enumerate(bounds):
                loss, positions = _train_chunk_pure(
                    enc, params, noise, keep, config, subwords, epoch, worker, lo, hi)
                epoch_loss += loss
                epoch_positions += positions
        if epoch == 0 and epoch_positions == 0:
            raise ConfigError("corpus is empty after subsampling; no training steps ran")
        mean_loss = epoch_loss / epoch_positions if epoch_positions else 0.0
        losses.append(mean_loss)
        if log is not None:
            elapsed = time.perf_counter() - t_start
            rate = enc.total_tokens / elapsed if elapsed > 0 else 0.0
            lr_now = lr_schedule(config.resolved_lr(), (epoch + 1) / config.epochs)
            print(
                f"epoch {epoch + 1}/{config.epochs}  lr {lr_now:.6f}  "
                f"mean loss {mean_loss:.4f}  {rate:,.0f} tokens/s",
                file=log,
            )
    vectors = _export_vectors(params, config, vocab, subwords)
    store = VectorStore(vocab, vectors)
    store.train_losses = losses
    return store


def _run_epoch_fast(kernel, enc, params, noise, keep, config, subwords, epoch, bounds):
    if subwords is not None:
        ng_rows, ng_off = subwords.rows, subwords.offsets
        max_ng = subwords.max_ngrams
    else:
        ng_rows = np.zeros(0, dtype=np.int64)
        ng_off = np.zeros(len(params.output_vectors) + 1, dtype=np.int64)
        max_ng = 0
    max_comp = max(1, 2 * config.window) * (1 + max_ng)
    cbow_flag = 1 if config.mode == "cbow" else 0

    def run(worker: int, lo: int, hi: int):
        return kernel(
            enc.tokens, enc.offsets, lo, hi, enc.cum_tokens, enc.total_tokens,
            epoch, config.epochs, params.input_vectors, params.output_vectors,
            noise.slots, keep, config.window, config.negatives, config.resolved_lr(),
            cbow_flag, ng_rows, ng_off,
            np.uint64(derive_state(config.seed, epoch, worker)),
            max(enc.max_sentence, 1), max_comp,
        )

    if len(bounds) == 1:
        results = [run(0, *bounds[0])]
    else:
        results = [None] * len(bounds)
        threads = []
        for worker, (lo, hi) in enumerate(bounds):
            def task(w=worker, a=lo, b=hi):
                results[w] = run(w, a, b)
            threads.append(threading.Thread(target=task))
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    total_loss = 0.0
    total_positions = 0
    for worker, (loss, positions, err) in enumerate(results):
        if err >= 0:
            raise TrainingDivergedError(
                f"non-finite dot product in negative-sampling step "
                f"(worker {worker}, position {err})"
            )
        total_loss += loss
        total_positions += int(positions)
    return total_loss, total_positions
