"""Unsupervised training: aggregation operators, soft-margin triplet loss
with exact gradients, plain SGD, center-word corruption, and PCA-based
word embedding initialization from co-occurrence counts.
"""

from __future__ import annotations

import time
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .corpus import DataError, ParallelCorpus, Sentence, Vocabulary, sample_negative
from .model import AlignmentModel, TargetWindows, scored_pair, scored_pair_backward

AGGREGATION_KINDS = ("sum", "max", "lse")


class TrainingError(RuntimeError):
    """Training diverged or hit non-finite values."""


@dataclass
class AggregationOp:
    """How a target word's scores against all source words are collapsed."""

    kind: str = "lse"
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in AGGREGATION_KINDS:
            raise ValueError(f"unknown aggregation {self.kind!r}")
        if self.kind == "lse" and not self.r > 0:
            raise ValueError("lse smoothness r must be positive")


def aggregate(row, op: AggregationOp) -> float:
    """Collapse one row of scores to a scalar; LSE uses the max-shifted form."""
    row = np.asarray(row, dtype=np.float64)
    if row.size == 0:
        raise ValueError("cannot aggregate an empty score row")
    if op.kind == "sum":
        return float(row.sum())
    if op.kind == "max":
        return float(row.max())
    m = row.max()
    return float(m + np.log(np.exp(op.r * (row - m)).sum()) / op.r)


def aggregate_grad(row, op: AggregationOp):
    """Aggregated value and its gradient with respect to the row.

    Sum routes gradient uniformly, Max only to the argmax entry (lowest
    index on ties), LSE with the softmax of r * scores.
    """
    row = np.asarray(row, dtype=np.float64)
    if row.size == 0:
        raise ValueError("cannot aggregate an empty score row")
    if op.kind == "sum":
        return float(row.sum()), np.ones_like(row)
    if op.kind == "max":
        grad = np.zeros_like(row)
        grad[int(np.argmax(row))] = 1.0
        return float(row.max()), grad
    m = row.max()
    e = np.exp(op.r * (row - m))
    z = e.sum()
    return float(m + np.log(z) / op.r), e / z


def _aggregate_rows(scores, op: AggregationOp):
    """aggregate_grad applied to every row of a score matrix."""
    values = np.empty(scores.shape[0])
    grads = np.empty_like(scores, dtype=np.float64)
    for i in range(scores.shape[0]):
        values[i], grads[i] = aggregate_grad(scores[i], op)
    return values, grads


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 10
    corruption_rate: float = 0.5
    aggregation: AggregationOp = field(default_factory=AggregationOp)
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ValueError("corruption_rate must be in [0, 1]")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


def corrupt_center(window_ids, vocab: Vocabulary, rng, corruption_rate: float,
                   surface=None):
    """Maybe replace the center word of a positive target window.

    With probability corruption_rate the center id becomes a uniformly
    random non-pad vocabulary id and the example turns negative.
    Returns (window_ids, surface, is_positive).
    """
    window_ids = np.array(window_ids, copy=True)
    positive = True
    if rng.random() < corruption_rate:
        positive = False
        rid = int(rng.integers(len(vocab) - 1))
        if rid >= vocab.pad_id:
            rid += 1
        center = len(window_ids) // 2
        window_ids[center] = rid
        if surface is not None:
            surface = (surface[:center] + (vocab.tokens[rid],)
                       + surface[center + 1 :])
    return window_ids, surface, positive


def _corrupt_batch(twin: TargetWindows, vocab: Vocabulary, rng,
                   corruption_rate: float):
    """Apply corrupt_center to every window; returns per-window labels."""
    labels = np.ones(len(twin.batch))
    for i in range(len(twin.batch)):
        surf = twin.batch.surfaces[i] if twin.batch.surfaces is not None else None
        ids, surf, positive = corrupt_center(
            twin.batch.word_ids[i], vocab, rng, corruption_rate, surf)
        if not positive:
            twin.batch.word_ids[i] = ids
            if surf is not None:
                twin.batch.surfaces[i] = surf
            labels[i] = -1.0
    return labels


def loss_and_grads(model: AlignmentModel, positive: Sentence, source: Sentence,
                   negative: Sentence, op: AggregationOp, *,
                   rng=None, corruption_rate: float = 0.0):
    """Soft-margin loss of one (e+, e-, f) triplet and its exact gradients.

    Positive target windows contribute log(1 + exp(-s_aggr)) terms, windows
    of the negative sentence (and corrupted positives) contribute
    log(1 + exp(+s_aggr)). Returns (loss_sum, n_terms, grads).
    """
    grads = model.zero_grads()
    twin_pos = model.target_windows(positive)
    if corruption_rate > 0.0:
        if rng is None:
            raise ValueError("corruption requires an rng")
        labels_pos = _corrupt_batch(twin_pos, model.vocab_e, rng, corruption_rate)
    else:
        labels_pos = np.ones(len(positive))
    twin_neg = model.target_windows(negative)
    groups = [(twin_pos, labels_pos), (twin_neg, -np.ones(len(negative)))]

    total = 0.0
    n_terms = 0
    for twin, labels in groups:
        scores, ctx = scored_pair(model, twin, source)
        values, row_grads = _aggregate_rows(np.asarray(scores, dtype=np.float64), op)
        total += float(np.logaddexp(0.0, -labels * values).sum())
        n_terms += len(values)
        dvalues = -labels * _sigmoid(-labels * values)
        scored_pair_backward(ctx, dvalues[:, None] * row_grads, grads)
    return total, n_terms, grads


def sgd_epoch(corpus: ParallelCorpus, model: AlignmentModel,
              config: TrainConfig, rng) -> float:
    """One pass over a shuffled corpus with plain SGD; returns mean loss."""
    if len(corpus) < 2:
        raise DataError("training needs at least two sentence pairs")
    order = rng.permutation(len(corpus))
    total = 0.0
    n_terms = 0
    for idx in order:
        e_pos, f = corpus.pairs[idx]
        e_neg = sample_negative(corpus, int(idx), rng)
        loss, terms, grads = loss_and_grads(
            model, e_pos, f, e_neg, config.aggregation,
            rng=rng, corruption_rate=config.corruption_rate)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at pair {idx}")
        model.sgd_update(grads, config.learning_rate)
        total += loss
        n_terms += terms
    return total / n_terms


def train(corpus: ParallelCorpus, model: AlignmentModel, config: TrainConfig,
          log_stream=None) -> list[float]:
    """Run config.epochs SGD epochs; logs `epoch, mean_loss, wall_seconds`."""
    rng = np.random.default_rng(config.seed)
    losses = []
    for epoch in range(config.epochs):
        start = time.perf_counter()
        mean_loss = sgd_epoch(corpus, model, config, rng)
        losses.append(mean_loss)
        if log_stream is not None:
            wall = time.perf_counter() - start
            log_stream.write(f"{epoch}, {mean_loss:.6f}, {wall:.2f}\n")
            log_stream.flush()
    return losses


@dataclass
class CoocMatrix:
    """Sparse word/context co-occurrence counts over symmetric windows."""

    counts: Counter
    vocab_size: int
    radius: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.vocab_size, self.vocab_size))
        for (w, c), n in self.counts.items():
            dense[w, c] = n
        return dense


def cooccurrence_counts(sentences, vocab_size: int, radius: int = 5) -> CoocMatrix:
    counts: Counter = Counter()
    for sent in sentences:
        ids = sent.token_ids if isinstance(sent, Sentence) else np.asarray(sent)
        n = len(ids)
        for k in range(n):
            lo, hi = max(0, k - radius), min(n, k + radius + 1)
            for c in range(lo, hi):
                if c != k:
                    counts[(int(ids[k]), int(ids[c]))] += 1
    return CoocMatrix(counts, vocab_size, radius)


def pca_init(sentences, vocab: Vocabulary, dim: int, radius: int = 5, *,
             hellinger: bool = True, seed: int = 0, n_iter: int = 500
             ) -> np.ndarray:
    """Word embeddings from PCA over (Hellinger-transformed) co-occurrences.

    Rows are normalized to context distributions, square-rooted (unless
    hellinger=False, which keeps raw counts), centered, and projected onto
    the top principal directions found by orthogonalized power iteration.
    Zero-count, UNK and PAD rows come out as zero vectors.
    """
    cooc = cooccurrence_counts(sentences, len(vocab), radius)
    c = cooc.to_dense()
    rowsum = c.sum(axis=1)
    retained = rowsum > 0
    retained[vocab.unk_id] = False
    retained[vocab.pad_id] = False
    if not retained.any():
        raise DataError("no words with co-occurrence counts")
    a = np.zeros_like(c)
    if hellinger:
        a[retained] = np.sqrt(c[retained] / rowsum[retained, None])
    else:
        a[retained] = c[retained]
    mean = a[retained].mean(axis=0)
    ac = np.where(retained[:, None], a - mean, 0.0)
    cov = ac[retained].T @ ac[retained]

    rank = np.linalg.matrix_rank(cov)
    n_dirs = min(dim, rank)
    if n_dirs < dim:
        warnings.warn(
            f"requested {dim} embedding dimensions but covariance rank is "
            f"{rank}; padding with zeros", stacklevel=2)

    rng = np.random.default_rng(seed)
    g = rng.standard_normal((cov.shape[0], n_dirs))
    g, _ = np.linalg.qr(g)
    prev = None
    for _ in range(n_iter):
        g, _ = np.linalg.qr(cov @ g)
        proj = g @ g.T
        if prev is not None and np.abs(proj - prev).max() < 1e-13:
            break
        prev = proj

    emb = np.zeros((len(vocab), dim))
    emb[:, :n_dirs] = ac @ g
    emb[~retained] = 0.0
    return emb
