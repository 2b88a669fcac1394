"""Command-line entry point.

Subcommands wire the library into the usual workflow:

    wordemb preprocess raw.txt corpus.txt
    wordemb train corpus.txt vectors.txt --mode skipgram --dim 100
    wordemb eval-analogy vectors.txt questions.txt --groups groups.tsv
    wordemb eval-similarity vectors.txt pairs.tsv --scale-max 10
    wordemb nn vectors.txt king -k 10
    wordemb build-corpus manifest.tsv questions.txt --groups-out groups.tsv
    wordemb validate-corpus questions.txt vocab.tsv

Exit codes: 0 on success, 1 on domain failures (unresolvable word,
undefined correlation, diverged training), 2 on input or configuration
errors. Arguments and paths are validated before any long-running work.
"""

import argparse
import os
import sys

from . import corpus as corpusmod
from . import corpus_tools, evaluation, trainer
from .errors import ConfigError, ParseError, TrainingDivergedError, WordembError
from .store import VectorStore


def _check_readable(path: str) -> None:
    if not os.path.isfile(path):
        raise ConfigError(f"input file not found: {path}")
    if not os.access(path, os.R_OK):
        raise ConfigError(f"input file not readable: {path}")


def _check_writable(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise ConfigError(f"output directory does not exist: {parent}")
    if os.path.exists(path) and not os.access(path, os.W_OK):
        raise ConfigError(f"output file not writable: {path}")
    if not os.path.exists(path) and not os.access(parent, os.W_OK):
        raise ConfigError(f"output directory not writable: {parent}")


def cmd_preprocess(args) -> int:
    _check_readable(args.input)
    _check_writable(args.output)
    sentences_read = 0
    sentences_kept = 0
    tokens_kept = 0
    with open(args.input, encoding="utf-8") as src, \
            open(args.output, "w", encoding="utf-8", newline="\n") as dst:
        for line in src:
            tokens = corpusmod.tokenize_line(line)
            if not tokens and not line.strip():
                continue
            sentences_read += 1
            if len(tokens) >= args.min_sentence_len:
                sentences_kept += 1
                tokens_kept += len(tokens)
                dst.write(" ".join(tokens) + "\n")
    print(f"sentences_read={sentences_read}")
    print(f"sentences_kept={sentences_kept}")
    print(f"tokens_kept={tokens_kept}")
    return 0


def _read_sentences(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            tokens = corpusmod.tokenize_line(line)
            if tokens:
                yield tokens


def _build_train_config(args) -> trainer.ModelConfig:
    values = {}
    if args.config is not None:
        _check_readable(args.config)
        values.update(trainer.read_config_file(args.config))
    if args.model is not None:
        mode, subword = trainer.MODEL_NAMES[args.model]
        values["mode"] = mode
        values["subword"] = subword
    for key in ("mode", "subword", "dim", "window", "negatives", "initial_lr", "epochs",
                "min_count", "subsample_t", "minn", "maxn", "buckets", "seed", "workers"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    # available parallelism unless the file or a flag said otherwise
    values.setdefault("workers", os.cpu_count() or 1)
    return trainer.ModelConfig().with_overrides(values)


def cmd_train(args) -> int:
    config = _build_train_config(args)
    _check_readable(args.corpus)
    _check_writable(args.output)
    if args.save_vocab:
        _check_writable(args.save_vocab)
    vocab = corpusmod.build_vocabulary(_read_sentences(args.corpus), config.min_count)
    print(f"vocabulary: {len(vocab)} words, {vocab.total_tokens} tokens", file=sys.stderr)
    if args.save_vocab:
        vocab.save(args.save_vocab)
    store = trainer.train(_read_sentences(args.corpus), vocab, config, log=sys.stderr)
    store.save_text(args.output)
    print(f"wrote {len(store)} x {store.dim} vectors to {args.output}", file=sys.stderr)
    return 0


def cmd_eval_analogy(args) -> int:
    _check_readable(args.vectors)
    _check_readable(args.questions)
    if args.groups:
        _check_readable(args.groups)
    store = VectorStore.load_text(args.vectors)
    corpus = evaluation.load_analogy_corpus(args.questions, groups_path=args.groups)
    report = evaluation.evaluate_analogies(store, corpus, search_limit=args.top,
                                           workers=args.workers)
    print(report.format_table())
    print()
    for line in report.to_keyvalues():
        print(line)
    return 0


def cmd_eval_similarity(args) -> int:
    _check_readable(args.vectors)
    _check_readable(args.pairs)
    store = VectorStore.load_text(args.vectors)
    pairs = evaluation.load_similarity_pairs(
        args.pairs, scale_min=args.scale_min, scale_max=args.scale_max)
    report = evaluation.evaluate_similarity(store, pairs)
    if args.detail:
        for d in report.details:
            flags = "".join(("1" if d.w1_oov else "-", "2" if d.w2_oov else "-"))
            print(f"{d.w1}\t{d.w2}\t{d.human_score:.4f}\t{d.model_score:.6f}\t{flags}")
    print(f"pairs={len(report.details)}")
    print(f"oov_pairs={report.oov_pairs}")
    print(f"spearman_x100={report.score:.2f}")
    return 0


def _edit_distance_at_most(a: str, b: str, cap: int) -> bool:
    if abs(len(a) - len(b)) > cap:
        return False
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        best = current[0]
        for j, cb in enumerate(b, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ca != cb),
            )
            best = min(best, current[j])
        if best > cap:
            return False
        previous = current
    return previous[-1] <= cap


def cmd_nn(args) -> int:
    _check_readable(args.vectors)
    store = VectorStore.load_text(args.vectors)
    idx = store.resolve(args.word)
    if idx is None:
        print(f"word not found: {args.word}", file=sys.stderr)
        close = [w for w in store.vocab.words if _edit_distance_at_most(w, args.word, 2)]
        if close:
            print("did you mean: " + ", ".join(close[:10]), file=sys.stderr)
        return 1
    hits = store.nearest(store.vectors[idx], args.k, exclude={idx})
    for word, score in hits:
        print(f"{score:.6f}\t{word}")
    return 0


def cmd_build_corpus(args) -> int:
    _check_readable(args.manifest)
    _check_writable(args.output)
    if args.groups_out:
        _check_writable(args.groups_out)
    specs = corpus_tools.specs_from_manifest(args.manifest)
    corpus, stats = corpus_tools.build_corpus(specs)
    evaluation.save_analogy_corpus(corpus, args.output, groups_path=args.groups_out)
    for line in stats.to_keyvalues():
        print(line)
    return 0


def cmd_validate_corpus(args) -> int:
    _check_readable(args.questions)
    _check_readable(args.vocab)
    if args.groups:
        _check_readable(args.groups)
    corpus = evaluation.load_analogy_corpus(args.questions, groups_path=args.groups)
    vocab = corpusmod.Vocabulary.load(args.vocab)
    report = corpus_tools.validate_corpus(corpus, vocab, search_limit=args.top)
    for line in report.to_keyvalues():
        print(line)
    if args.show_oov:
        for c in report.categories:
            for word, occurrences in sorted(c.oov_words.items(), key=lambda kv: -kv[1]):
                print(f"oov.{c.name}.{word}={occurrences}")
    return 0


def _add_train_arguments(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--model", choices=sorted(trainer.MODEL_NAMES),
                   help="named variant; shorthand for --mode plus --subword")
    p.add_argument("--mode", choices=trainer.MODES)
    p.add_argument("--subword", choices=["on", "off", "true", "false"])
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--initial-lr", dest="initial_lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--min-count", dest="min_count", type=int)
    p.add_argument("--subsample-t", dest="subsample_t", type=float)
    p.add_argument("--minn", type=int)
    p.add_argument("--maxn", type=int)
    p.add_argument("--buckets", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int,
                   help="training threads (default: available parallelism)")
    p.add_argument("--save-vocab", help="also write the word<TAB>count vocabulary dump")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordemb",
        description="Train and evaluate word embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="tokenize and keep sentences of >= N tokens")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--min-sentence-len", type=int, default=5)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="build a vocabulary and train vectors")
    p.add_argument("corpus", help="preprocessed text, one sentence per line")
    p.add_argument("output", help="vectors file to write (text format)")
    _add_train_arguments(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-analogy", help="per-category analogy accuracy report")
    p.add_argument("vectors")
    p.add_argument("questions")
    p.add_argument("--groups", help="sidecar 'name<TAB>semantic|syntactic' mapping")
    p.add_argument("--top", type=int, default=evaluation.DEFAULT_SEARCH_LIMIT,
                   help="restrict search to the most frequent N words")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_eval_analogy)

    p = sub.add_parser("eval-similarity", help="rank correlation against human scores")
    p.add_argument("vectors")
    p.add_argument("pairs", help="'w1<TAB>w2<TAB>score' lines")
    p.add_argument("--scale-min", type=float, default=0.0)
    p.add_argument("--scale-max", type=float, default=10.0)
    p.add_argument("--detail", action="store_true", help="print per-pair scores")
    p.set_defaults(func=cmd_eval_similarity)

    p = sub.add_parser("nn", help="nearest neighbors of a word")
    p.add_argument("vectors")
    p.add_argument("word")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("build-corpus", help="expand category pair lists into questions")
    p.add_argument("manifest", help="'name<TAB>group<TAB>path' lines")
    p.add_argument("output")
    p.add_argument("--groups-out", help="also write the sidecar group mapping")
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("validate-corpus", help="vocabulary coverage of a question set")
    p.add_argument("questions")
    p.add_argument("vocab", help="word<TAB>count dump")
    p.add_argument("--groups", help="sidecar group mapping")
    p.add_argument("--top", type=int, default=None)
    p.add_argument("--show-oov", action="store_true", help="list missing words")
    p.set_defaults(func=cmd_validate_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (OSError, UnicodeDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (TrainingDivergedError, WordembError, ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
