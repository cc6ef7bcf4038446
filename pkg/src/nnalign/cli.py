"""Command line front-end wiring the pipeline end to end.

Exit codes: 0 success, 1 usage/configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import analysis, corpus as corpus_io, decoding, evaluate, symmetrize as sym
from .corpus import (
    DataError,
    GoldAlignment,
    ParallelCorpus,
    Vocabulary,
    build_char_vocab,
    build_vocab,
    encode,
    load_gold,
    read_pharaoh,
    read_tokenized,
    write_pharaoh,
)
from .model import (
    AlignmentModel,
    ConfigError,
    EncoderConfig,
    load_model,
    save_model,
)
from .training import AggregationOp, TrainConfig, pca_init, train


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with code 1 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_corpus_args(p, pos_vocabs=True):
    p.add_argument("--target", required=True, help="target-side text file")
    p.add_argument("--source", required=True, help="source-side text file")
    p.add_argument("--vocab-e", required=True, help="target vocabulary file")
    p.add_argument("--vocab-f", required=True, help="source vocabulary file")
    p.add_argument("--tagged", action="store_true",
                   help="corpus tokens are surface|TAG")
    if pos_vocabs:
        p.add_argument("--pos-vocab-e", help="target POS vocabulary file")
        p.add_argument("--pos-vocab-f", help="source POS vocabulary file")


def _load_vocabs(args):
    vocab_e = Vocabulary.load(args.vocab_e)
    vocab_f = Vocabulary.load(args.vocab_f)
    pos_e = Vocabulary.load(args.pos_vocab_e) if getattr(args, "pos_vocab_e", None) else None
    pos_f = Vocabulary.load(args.pos_vocab_f) if getattr(args, "pos_vocab_f", None) else None
    return vocab_e, vocab_f, pos_e, pos_f


def _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f) -> ParallelCorpus:
    return corpus_io.load_parallel(
        args.target, args.source, vocab_e, vocab_f,
        tagged=args.tagged, pos_vocab_e=pos_e, pos_vocab_f=pos_f)


# Defaults shared by the train flags and the flat key-value config file.
TRAIN_DEFAULTS = {
    "epochs": 10,
    "learning_rate": 0.01,
    "corruption_rate": 0.5,
    "aggregation": "lse",
    "r": 1.0,
    "seed": 0,
    "k1_e": 3,
    "k2_e": 3,
    "k1_f": 3,
    "k2_f": 3,
    "d_emb_word": 128,
    "d_hu": 256,
    "d_emb": 256,
    "pos": False,
    "char": False,
    "diag": False,
    "diag_bins": 20,
    "d_emb_pos": 32,
    "d_emb_char": 128,
    "d_emb_diag": 32,
    "max_word_len": 20,
}


def _read_config_file(path) -> dict:
    """Flat `key value` (or `key=value`) file using the train flag names."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, value = (x.strip() for x in line.split("=", 1))
            else:
                parts = line.split(None, 1)
                if len(parts) != 2:
                    raise DataError(f"{path} line {lineno}: expected key value")
                key, value = parts
            key = key.replace("-", "_")
            if key not in TRAIN_DEFAULTS:
                raise DataError(f"{path} line {lineno}: unknown key {key!r}")
            default = TRAIN_DEFAULTS[key]
            if isinstance(default, bool):
                if value.lower() not in ("true", "false", "1", "0"):
                    raise DataError(f"{path} line {lineno}: bad boolean {value!r}")
                out[key] = value.lower() in ("true", "1")
            else:
                try:
                    out[key] = type(default)(value)
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}: bad value {value!r}") from None
    return out


def _merged_train_options(args) -> dict:
    opts = dict(TRAIN_DEFAULTS)
    if args.config:
        opts.update(_read_config_file(args.config))
    for key in TRAIN_DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            opts[key] = value
    return opts


def cmd_vocab(args) -> int:
    lines = read_tokenized(args.corpus, tagged=args.tagged)
    vocab = build_vocab((t for toks, _ in lines for t in toks), args.max_size)
    vocab.save(args.out)
    if args.pos_out:
        if not args.tagged:
            raise ConfigError("--pos-out requires --tagged")
        pos = build_vocab((t for _, tags in lines for t in tags), 10**9)
        pos.save(args.pos_out)
    return 0


def cmd_init_embeddings(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    lines = read_tokenized(args.corpus, tagged=args.tagged)
    sentences = [encode(toks, vocab) for toks, _ in lines]
    emb = pca_init(sentences, vocab, args.dim, radius=args.radius,
                   hellinger=not args.raw_counts, seed=args.seed)
    np.save(args.out, emb.astype(np.float32))
    return 0


def _encoder_configs(opts, corpus_lines_e, corpus_lines_f):
    def side_cfg(k1, k2, use_diag, lines):
        char_vocab = None
        if opts["char"]:
            char_vocab = build_char_vocab(t for toks, _ in lines for t in toks)
        return EncoderConfig(
            k1=k1, k2=k2,
            d_emb_word=opts["d_emb_word"], d_hu=opts["d_hu"], d_emb=opts["d_emb"],
            use_pos=opts["pos"], use_char=opts["char"], use_diag=use_diag,
            d_emb_pos=opts["d_emb_pos"], d_emb_char=opts["d_emb_char"],
            d_emb_diag=opts["d_emb_diag"], diag_bins=opts["diag_bins"],
            max_word_len=opts["max_word_len"], char_vocab=char_vocab)

    cfg_e = side_cfg(opts["k1_e"], opts["k2_e"], False, corpus_lines_e)
    cfg_f = side_cfg(opts["k1_f"], opts["k2_f"], opts["diag"], corpus_lines_f)
    return cfg_e, cfg_f


def cmd_train(args) -> int:
    opts = _merged_train_options(args)
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    if opts["pos"] and (pos_e is None or pos_f is None):
        raise ConfigError("--pos requires --pos-vocab-e and --pos-vocab-f")
    lines_e = read_tokenized(args.target, tagged=args.tagged)
    lines_f = read_tokenized(args.source, tagged=args.tagged)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    cfg_e, cfg_f = _encoder_configs(opts, lines_e, lines_f)
    model = AlignmentModel(cfg_e, cfg_f, vocab_e, vocab_f, pos_e, pos_f,
                           seed=opts["seed"])
    for attr, path in (("enc_e", args.init_emb_e), ("enc_f", args.init_emb_f)):
        if path:
            emb = np.load(path)
            table = getattr(model, attr).params["W"]
            if emb.shape != table.shape:
                raise DataError(
                    f"{path}: embedding shape {emb.shape} does not match "
                    f"vocabulary table {table.shape}")
            table[...] = emb.astype(table.dtype)
    config = TrainConfig(
        learning_rate=opts["learning_rate"], epochs=opts["epochs"],
        corruption_rate=opts["corruption_rate"],
        aggregation=AggregationOp(opts["aggregation"], opts["r"]),
        seed=opts["seed"])
    if args.log:
        with open(args.log, "w", encoding="utf-8") as log_stream:
            train(corpus, model, config, log_stream)
    else:
        train(corpus, model, config)
    save_model(model, args.out)
    return 0


def _load_models(args, vocab_e, vocab_f, pos_e, pos_f):
    paths = args.ensemble if args.ensemble else [args.model]
    if not paths or paths[0] is None:
        raise ConfigError("give --model or --ensemble")
    return [load_model(p, vocab_e, vocab_f, pos_e, pos_f) for p in paths]


def _ensemble_score_fn(models):
    def score(target, source):
        return decoding.ensemble_scores(
            [m.score_matrix(target, source) for m in models])
    return score


def cmd_stats(args) -> int:
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    models = _load_models(args, vocab_e, vocab_f, pos_e, pos_f)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    rng = np.random.default_rng(args.seed)
    stats = decoding.estimate_threshold_stats(
        models[0], corpus, args.n_sentences, args.n_negatives, rng,
        score_fn=_ensemble_score_fn(models))
    stats.save(args.out)
    return 0


def cmd_align(args) -> int:
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    models = _load_models(args, vocab_e, vocab_f, pos_e, pos_f)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    stats = decoding.ThresholdStats.load(args.stats)
    score = _ensemble_score_fn(models)
    alignments = []
    for target, source in corpus.pairs:
        alignments.append(
            decoding.decode(score(target, source), stats, args.alpha, target))
    write_pharaoh(alignments, args.out)
    return 0


def cmd_dump_scores(args) -> int:
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    model = load_model(args.model, vocab_e, vocab_f, pos_e, pos_f)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    matrices = [model.score_matrix(e, f) for e, f in corpus.pairs]
    decoding.write_score_dump(matrices, args.out)
    return 0


def cmd_symmetrize(args) -> int:
    forward = read_pharaoh(args.forward)
    reverse = read_pharaoh(args.reverse)
    if len(forward) != len(reverse):
        raise DataError(
            f"line count mismatch: {args.forward} has {len(forward)}, "
            f"{args.reverse} has {len(reverse)}")
    out = []
    for e2f, f2e in zip(forward, reverse):
        pair = sym.DirectionalPair(e2f, sym.transpose(f2e))
        out.append(sym.symmetrize(pair, args.heuristic))
    write_pharaoh(out, args.out)
    return 0


def cmd_eval(args) -> int:
    hyp = read_pharaoh(args.hypothesis)
    gold_map = load_gold(args.gold)
    if gold_map and max(gold_map) >= len(hyp):
        raise DataError(
            f"gold refers to sentence {max(gold_map) + 1} but hypothesis "
            f"has {len(hyp)} lines")
    golds = [gold_map.get(i, GoldAlignment()) for i in range(len(hyp))]
    if args.target and args.source:
        tgt = read_tokenized(args.target)
        src = read_tokenized(args.source)
        if len(tgt) != len(hyp):
            raise DataError("corpus and hypothesis line counts differ")
        for i, (links, gold) in enumerate(zip(hyp, golds)):
            for ti, si in set(links) | gold.possible:
                if ti >= len(tgt[i][0]) or si >= len(src[i][0]):
                    raise DataError(
                        f"sentence {i + 1}: link {ti}-{si} out of bounds")
    if args.per_sentence:
        for i, m in enumerate(evaluate.per_sentence_report(hyp, golds)):
            print(f"{i + 1} {evaluate.format_summary(m)}")
    print(evaluate.format_summary(evaluate.metrics(hyp, golds)))
    return 0


def _parse_query(args, model):
    if model.enc_f.config.use_pos:
        if not args.tagged:
            raise ConfigError("model uses POS; give the query as token|TAG "
                              "with --tagged")
        tokens, tags = [], []
        for tok in args.query.split():
            if "|" not in tok:
                raise DataError(f"query token {tok!r} has no |TAG")
            surface, tag = tok.rsplit("|", 1)
            tokens.append(surface)
            tags.append(tag)
        return encode(tokens, model.vocab_f, tags, model.pos_vocab_f)
    return encode(args.query.split(), model.vocab_f)


def cmd_analyze_neighbors(args) -> int:
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    model = load_model(args.model, vocab_e, vocab_f, pos_e, pos_f)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    query = _parse_query(args, model)
    sources = [f for _, f in corpus.pairs]
    for surface, dist in analysis.nearest_source_windows(
            model, sources, query, args.k):
        text = " ".join(t if t else "<pad>" for t in surface)
        print(f"{dist:.6f}\t{text}")
    return 0


def cmd_analyze_translations(args) -> int:
    vocab_e, vocab_f, pos_e, pos_f = _load_vocabs(args)
    model = load_model(args.model, vocab_e, vocab_f, pos_e, pos_f)
    corpus = _load_corpus(args, vocab_e, vocab_f, pos_e, pos_f)
    query = _parse_query(args, model)
    targets = [e for e, _ in corpus.pairs]
    for word, score in analysis.top_target_words(model, targets, query, args.k):
        print(f"{score:.6f}\t{word}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="nnalign",
                     description="Unsupervised neural word alignment")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="build a vocabulary from a corpus side")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-size", type=int, default=30000)
    p.add_argument("--tagged", action="store_true")
    p.add_argument("--pos-out", help="also write a POS vocabulary")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("init-embeddings",
                       help="PCA word embeddings from co-occurrence counts")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--radius", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--raw-counts", action="store_true",
                   help="skip the Hellinger transform")
    p.add_argument("--tagged", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init_embeddings)

    p = sub.add_parser("train", help="train an alignment model")
    _add_corpus_args(p)
    p.add_argument("--config", help="flat key-value config file")
    p.add_argument("--init-emb-e", help=".npy word embeddings, target side")
    p.add_argument("--init-emb-f", help=".npy word embeddings, source side")
    p.add_argument("--out", required=True)
    p.add_argument("--log", help="epoch log file")
    for key, default in TRAIN_DEFAULTS.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            p.add_argument(flag, action=argparse.BooleanOptionalAction,
                           default=None)
        else:
            p.add_argument(flag, type=type(default), default=None,
                           choices=("sum", "max", "lse")
                           if key == "aggregation" else None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("stats", help="estimate decoding threshold statistics")
    _add_corpus_args(p)
    p.add_argument("--model")
    p.add_argument("--ensemble", nargs="+", help="model files to average")
    p.add_argument("--n-sentences", type=int, default=1000)
    p.add_argument("--n-negatives", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("align", help="decode alignments to a Pharaoh file")
    _add_corpus_args(p)
    p.add_argument("--model")
    p.add_argument("--ensemble", nargs="+", help="model files to average")
    p.add_argument("--stats", required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("dump-scores",
                       help="write per-pair score matrices as text")
    _add_corpus_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dump_scores)

    p = sub.add_parser("symmetrize",
                       help="combine forward and reverse alignments")
    p.add_argument("--forward", required=True, help="target->source Pharaoh file")
    p.add_argument("--reverse", required=True,
                   help="source->target Pharaoh file (auto-transposed)")
    p.add_argument("--heuristic", required=True, choices=sym.HEURISTICS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_symmetrize)

    p = sub.add_parser("eval", help="score a hypothesis against gold links")
    p.add_argument("--hypothesis", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--target", help="target text, for bounds checking")
    p.add_argument("--source", help="source text, for bounds checking")
    p.add_argument("--per-sentence", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze-neighbors",
                       help="nearest source windows to a query window")
    _add_corpus_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--query", required=True, help="space-separated window")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_analyze_neighbors)

    p = sub.add_parser("analyze-translations",
                       help="top-scoring target words for a source window")
    _add_corpus_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--query", required=True, help="space-separated window")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_analyze_translations)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, DataError):
            print(f"nnalign: data error: {exc}", file=sys.stderr)
            return 2
        print(f"nnalign: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"nnalign: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
