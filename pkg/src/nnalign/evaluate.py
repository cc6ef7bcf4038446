"""Precision, recall, F1 and alignment error rate against sure/possible
gold links (standard Och-Ney definitions, micro-averaged over the corpus).
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import DataError, GoldAlignment


@dataclass
class AlignmentMetrics:
    precision: float
    recall: float
    f1: float
    aer: float
    n_links: int
    n_sure: int
    n_hits_sure: int
    n_hits_possible: int


def _sentence_counts(links, gold: GoldAlignment):
    links = set(links)
    if not gold.sure <= gold.possible:
        raise DataError("gold sure links are not a subset of possible links")
    return (len(links), len(gold.sure),
            len(links & gold.sure), len(links & gold.possible))


def metrics(hypotheses, golds) -> AlignmentMetrics:
    """Corpus-level metrics over parallel lists of hypothesis and gold links.

    precision = |A&P| / |A|, recall = |A&S| / |S|,
    AER = 1 - (|A&S| + |A&P|) / (|A| + |S|).
    Empty denominators: no links -> precision 1, no sure links -> recall 1.
    """
    hypotheses = list(hypotheses)
    golds = list(golds)
    if len(hypotheses) != len(golds):
        raise DataError(
            f"{len(hypotheses)} hypothesis sentences but {len(golds)} gold")
    n_a = n_s = hits_s = hits_p = 0
    for links, gold in zip(hypotheses, golds):
        a, s, hs, hp = _sentence_counts(links, gold)
        n_a += a
        n_s += s
        hits_s += hs
        hits_p += hp
    precision = hits_p / n_a if n_a else 1.0
    recall = hits_s / n_s if n_s else 1.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    aer = 1.0 - (hits_s + hits_p) / (n_a + n_s) if n_a + n_s else 0.0
    return AlignmentMetrics(precision, recall, f1, aer, n_a, n_s, hits_s, hits_p)


def format_summary(m: AlignmentMetrics) -> str:
    return f"{m.precision:.4f} {m.recall:.4f} {m.f1:.4f} {m.aer:.4f}"


def per_sentence_report(hypotheses, golds):
    """One AlignmentMetrics per sentence pair, same conventions as metrics."""
    return [metrics([links], [gold]) for links, gold in zip(hypotheses, golds)]
