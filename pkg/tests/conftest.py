"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from nnalign.corpus import ParallelCorpus, Vocabulary, build_vocab, encode
from nnalign.model import AlignmentModel, EncoderConfig


def make_vocab(tokens) -> Vocabulary:
    """Vocabulary over a token list, one count each, original order kept."""
    return build_vocab(iter(tokens), len(tokens))


@pytest.fixture
def tiny_vocabs():
    vocab_e = make_vocab([f"t{k}" for k in range(5)])
    vocab_f = make_vocab([f"s{k}" for k in range(5)])
    return vocab_e, vocab_f


def small_model(vocab_e, vocab_f, *, k1=1, k2=1, use_pos=False, use_char=False,
                use_diag=False, pos_vocab_e=None, pos_vocab_f=None,
                seed=0, dtype=np.float64, d_emb_word=4, d_hu=5, d_emb=4,
                char_vocab_e=None, char_vocab_f=None):
    """A deliberately small model for oracle and property tests."""
    cfg_e = EncoderConfig(
        k1=k1, k2=k2, d_emb_word=d_emb_word, d_hu=d_hu, d_emb=d_emb,
        use_pos=use_pos, use_char=use_char, use_diag=False,
        d_emb_pos=3, d_emb_char=3, d_emb_diag=3, diag_bins=4,
        max_word_len=6, char_vocab=char_vocab_e)
    cfg_f = EncoderConfig(
        k1=k1, k2=k2, d_emb_word=d_emb_word, d_hu=d_hu, d_emb=d_emb,
        use_pos=use_pos, use_char=use_char, use_diag=use_diag,
        d_emb_pos=3, d_emb_char=3, d_emb_diag=3, diag_bins=4,
        max_word_len=6, char_vocab=char_vocab_f)
    return AlignmentModel(cfg_e, cfg_f, vocab_e, vocab_f,
                          pos_vocab_e, pos_vocab_f, seed=seed, dtype=dtype)


# ---------------------------------------------------------------------------
# Synthetic dictionary corpora. The target side is a word-for-word image of
# the source under a fixed bijective dictionary, optionally reordered by
# independent adjacent swaps. Gold links follow the permutation exactly.
# ---------------------------------------------------------------------------

DICT_SIZE = 50
SRC_WORDS = [f"src{k:02d}" for k in range(DICT_SIZE)]
TGT_WORDS = [f"tgt{k:02d}" for k in range(DICT_SIZE)]
DICTIONARY = dict(zip(SRC_WORDS, TGT_WORDS))


def synthetic_pairs(n_pairs, seed, swap_rate=0.0, min_len=5, max_len=12):
    """(target_tokens, source_tokens, gold_links) triples.

    Adjacent positions are swapped independently with probability swap_rate
    in a single left-to-right scan (swapped positions are not re-swapped),
    so gold stays a bijection between positions.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_pairs):
        length = int(rng.integers(min_len, max_len + 1))
        src = [SRC_WORDS[int(rng.integers(DICT_SIZE))] for _ in range(length)]
        tgt = [DICTIONARY[w] for w in src]
        perm = list(range(length))
        i = 0
        while i < length - 1:
            if rng.random() < swap_rate:
                perm[i], perm[i + 1] = perm[i + 1], perm[i]
                i += 2
            else:
                i += 1
        tgt = [tgt[perm[k]] for k in range(length)]
        gold = {(k, perm[k]) for k in range(length)}
        out.append((tgt, src, gold))
    return out


def encode_task(triples):
    """Vocabularies, encoded corpus and per-pair gold for synthetic triples."""
    vocab_e = build_vocab((w for t, _, _ in triples for w in t), DICT_SIZE)
    vocab_f = build_vocab((w for _, s, _ in triples for w in s), DICT_SIZE)
    corpus = ParallelCorpus(
        [(encode(t, vocab_e), encode(s, vocab_f)) for t, s, _ in triples])
    golds = [g for _, _, g in triples]
    return vocab_e, vocab_f, corpus, golds


# ---------------------------------------------------------------------------
# Finite differences. Entries whose true derivative is near zero have
# absolute finite-difference noise around h^2 plus roundoff, so the relative
# error uses a floored denominator; see the gradient tests for the tolerance.
# ---------------------------------------------------------------------------

def finite_difference_grads(loss_fn, model, h=1e-4):
    """Central finite differences of loss_fn() over every model parameter."""
    fd = {}
    for name, p in model.named_params():
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for idx in range(flat_p.size):
            orig = flat_p[idx]
            flat_p[idx] = orig + h
            up = loss_fn()
            flat_p[idx] = orig - h
            down = loss_fn()
            flat_p[idx] = orig
            flat_g[idx] = (up - down) / (2 * h)
        fd[name] = g
    return fd


def max_relative_error(analytic, fd, floor=1e-6):
    """max |a - f| / max(|a| + |f|, floor) over matching gradient dicts."""
    worst = 0.0
    for name, a in analytic.items():
        f = fd[name]
        denom = np.maximum(np.abs(a) + np.abs(f), floor)
        worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst
