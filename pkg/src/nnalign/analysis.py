"""Representation analysis: nearest source windows by Euclidean distance
and the target word types scoring highest against a source window.
"""

from __future__ import annotations

import warnings

import numpy as np

from .corpus import DataError, Sentence
from .model import AlignmentModel, WindowBatch, sentence_windows


def _encode_query_window(model: AlignmentModel, query: Sentence) -> np.ndarray:
    """Encode one source window given as a full-width token sequence.

    With the diag feature on, the on-diagonal bin 0 is used so that all
    windows are compared under the same positional feature.
    """
    cfg = model.enc_f.config
    if len(query) != cfg.d_win:
        raise DataError(
            f"query window must have exactly {cfg.d_win} tokens, got {len(query)}")
    batch = WindowBatch(
        query.token_ids[None, :],
        None if query.pos_ids is None else query.pos_ids[None, :],
        [query.surface] if cfg.use_char else None,
        np.zeros(1, dtype=np.intp) if cfg.use_diag else None,
    )
    return model.enc_f.encode(batch)[0]


def _corpus_source_windows(model: AlignmentModel, sources):
    """Encode every source window in the corpus; yields (surface, vector)."""
    cfg = model.enc_f.config
    half = cfg.pad_count
    for source in sources:
        batch = sentence_windows(source, cfg, model.vocab_f, model.pos_vocab_f)
        if cfg.use_diag:
            batch.diag_bins = np.zeros(len(batch), dtype=np.intp)
        vecs = model.enc_f.encode(batch)
        padded = ("",) * half + source.surface + ("",) * half
        for i in range(len(source)):
            yield padded[i : i + cfg.d_win], vecs[i]


def nearest_source_windows(model: AlignmentModel, sources, query: Sentence,
                           k: int):
    """k distinct source windows closest to the query, ascending distance.

    Duplicate surface windows collapse to their first corpus occurrence;
    distance ties also break by corpus order.
    """
    qvec = _encode_query_window(model, query)
    seen: dict[tuple, float] = {}
    order: list[tuple] = []
    for surface, vec in _corpus_source_windows(model, sources):
        if surface not in seen:
            seen[surface] = float(np.linalg.norm(
                np.asarray(vec, dtype=np.float64)
                - np.asarray(qvec, dtype=np.float64)))
            order.append(surface)
    ranked = sorted(range(len(order)), key=lambda idx: (seen[order[idx]], idx))
    if k > len(ranked):
        warnings.warn(
            f"only {len(ranked)} distinct windows available, requested {k}",
            stacklevel=2)
    return [(order[idx], seen[order[idx]]) for idx in ranked[:k]]


def top_target_words(model: AlignmentModel, targets, query: Sentence, k: int):
    """Target word types ranked by their maximum score against the query."""
    if k == 0:
        return []
    qvec = np.asarray(_encode_query_window(model, query), dtype=np.float64)
    best: dict[int, float] = {}
    for target in targets:
        twin = model.target_windows(target)
        u = np.asarray(model.enc_e.encode(twin.batch), dtype=np.float64)
        scores = u @ qvec
        for word_id, score in zip(target.token_ids, scores):
            word_id = int(word_id)
            if word_id not in best or score > best[word_id]:
                best[word_id] = float(score)
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    if k > len(ranked):
        warnings.warn(
            f"only {len(ranked)} target word types available, requested {k}",
            stacklevel=2)
    return [(model.vocab_e.tokens[wid], score) for wid, score in ranked[:k]]
