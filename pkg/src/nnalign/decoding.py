"""Decoding: per-target argmax with the negative-statistics threshold,
estimation of those statistics, and ensemble score averaging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import DataError, ParallelCorpus, Sentence, sample_negative_source
from .model import AlignmentModel


@dataclass
class ThresholdStats:
    """Per-target-word mean and standard deviation of negative-pair scores.

    Words never seen during estimation default to (0, 0).
    """

    mu: dict[int, float] = field(default_factory=dict)
    sigma: dict[int, float] = field(default_factory=dict)

    def threshold(self, word_id: int, alpha: float) -> float:
        return self.mu.get(word_id, 0.0) + alpha * self.sigma.get(word_id, 0.0)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for word_id in sorted(self.mu):
                f.write(f"{word_id} {self.mu[word_id]!r} {self.sigma[word_id]!r}\n")

    @classmethod
    def load(cls, path) -> "ThresholdStats":
        mu: dict[int, float] = {}
        sigma: dict[int, float] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                fields = line.split()
                if not fields:
                    continue
                if len(fields) != 3:
                    raise DataError(f"{path} line {lineno}: expected 3 fields")
                try:
                    word_id = int(fields[0])
                    mu[word_id] = float(fields[1])
                    sigma[word_id] = float(fields[2])
                except ValueError:
                    raise DataError(f"{path} line {lineno}: bad number") from None
        return cls(mu, sigma)


def estimate_threshold_stats(model: AlignmentModel, corpus: ParallelCorpus,
                             n_sentences: int, n_negatives: int, rng,
                             score_fn=None) -> ThresholdStats:
    """Accumulate scores of sampled target sentences against negative
    source sentences; token-weighted, population standard deviation.

    score_fn(target, source) defaults to the model's score matrix; ensembles
    pass an averaged-scores function so stats match what gets thresholded.
    """
    if n_sentences < 1 or n_negatives < 1:
        raise ValueError("n_sentences and n_negatives must be >= 1")
    if score_fn is None:
        score_fn = model.score_matrix
    picks = rng.choice(len(corpus), size=min(n_sentences, len(corpus)),
                       replace=False)
    sums: dict[int, float] = {}
    sqsums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for idx in picks:
        target = corpus.pairs[int(idx)][0]
        for _ in range(n_negatives):
            neg_source = sample_negative_source(corpus, int(idx), rng)
            scores = np.asarray(score_fn(target, neg_source), dtype=np.float64)
            for k, word_id in enumerate(target.token_ids):
                word_id = int(word_id)
                row = scores[k]
                sums[word_id] = sums.get(word_id, 0.0) + row.sum()
                sqsums[word_id] = sqsums.get(word_id, 0.0) + (row * row).sum()
                counts[word_id] = counts.get(word_id, 0) + row.size
    mu = {}
    sigma = {}
    for word_id, n in counts.items():
        m = sums[word_id] / n
        var = max(sqsums[word_id] / n - m * m, 0.0)
        mu[word_id] = float(m)
        sigma[word_id] = float(np.sqrt(var))
    return ThresholdStats(mu, sigma)


def decode(scores, stats: ThresholdStats, alpha: float,
           target: Sentence) -> set[tuple[int, int]]:
    """Link each target word to its argmax source word if the score clears
    mu + alpha * sigma; ties break to the lowest source index."""
    scores = np.asarray(scores)
    if scores.shape[0] != len(target):
        raise ValueError("score matrix does not match the target sentence")
    links = set()
    for i, word_id in enumerate(target.token_ids):
        j = int(np.argmax(scores[i]))
        if scores[i, j] > stats.threshold(int(word_id), alpha):
            links.add((i, j))
    return links


def ensemble_scores(matrices) -> np.ndarray:
    """Element-wise mean of score matrices from independently seeded models."""
    matrices = [np.asarray(m, dtype=np.float64) for m in matrices]
    if not matrices:
        raise ValueError("need at least one score matrix")
    shape = matrices[0].shape
    for m in matrices[1:]:
        if m.shape != shape:
            raise ValueError(f"score matrix shape mismatch: {m.shape} != {shape}")
    return sum(matrices) / len(matrices)


def write_score_dump(matrices, path):
    """Per-pair score matrices as text, full precision for exact re-parse."""
    with open(path, "w", encoding="utf-8") as f:
        for idx, m in enumerate(matrices):
            m = np.asarray(m)
            f.write(f"# pair {idx} {m.shape[0]} {m.shape[1]}\n")
            for row in m:
                f.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_score_dump(path) -> list[np.ndarray]:
    matrices = []
    with open(path, encoding="utf-8") as f:
        current: list[list[float]] = []
        shape = None
        for lineno, line in enumerate(f, 1):
            if line.startswith("# pair"):
                if shape is not None:
                    matrices.append(np.array(current))
                try:
                    _, _, _, rows, cols = line.split()
                    shape = (int(rows), int(cols))
                except ValueError:
                    raise DataError(f"{path} line {lineno}: bad header") from None
                current = []
            else:
                if shape is None:
                    raise DataError(f"{path} line {lineno}: data before header")
                current.append([float(x) for x in line.split()])
        if shape is not None:
            matrices.append(np.array(current))
    for idx, m in enumerate(matrices):
        if m.ndim != 2:
            raise DataError(f"{path}: ragged matrix for pair {idx}")
    return matrices
