"""Precision, recall, F1 and alignment error rate."""

import numpy as np
import pytest

from nnalign.corpus import DataError, GoldAlignment
from nnalign.evaluate import format_summary, metrics, per_sentence_report


def _gold(sure, possible=None):
    possible = set(sure) if possible is None else set(possible) | set(sure)
    return GoldAlignment(set(sure), possible)


class TestMetrics:
    def test_perfect_alignment(self):
        a = {(0, 0), (1, 1)}
        m = metrics([a], [_gold(a)])
        assert m.precision == m.recall == m.f1 == 1.0
        assert m.aer == 0.0

    def test_worked_example(self):
        # A={(0,0),(1,1)}, S={(0,0)}, P=S+{(1,1),(1,2)}:
        # |A∩S|=1, |A∩P|=2 -> precision 1, recall 1, AER 1 - 3/3 = 0.
        a = {(0, 0), (1, 1)}
        gold = _gold({(0, 0)}, {(1, 1), (1, 2)})
        m = metrics([a], [gold])
        assert m.precision == 1.0
        assert m.recall == 1.0
        assert m.aer == 0.0

    def test_disjoint_alignment(self):
        m = metrics([{(0, 1)}], [_gold({(1, 0)})])
        assert m.precision == 0.0 and m.recall == 0.0 and m.aer == 1.0

    def test_empty_hypothesis_precision_one(self):
        m = metrics([set()], [_gold({(0, 0)})])
        assert m.precision == 1.0
        assert m.recall == 0.0

    def test_no_sure_links_recall_one(self):
        m = metrics([{(0, 0)}], [_gold(set(), {(0, 0)})])
        assert m.recall == 1.0
        assert m.aer == 0.0

    def test_both_empty_aer_zero(self):
        m = metrics([set()], [_gold(set())])
        assert m.aer == 0.0 and m.precision == 1.0 and m.recall == 1.0

    def test_aer_equals_one_minus_f1_when_sure_is_possible(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n, k = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            cells = [(i, j) for i in range(n) for j in range(k)]
            a = {cells[int(x)] for x in
                 rng.choice(len(cells), rng.integers(1, len(cells) + 1),
                            replace=False)}
            s = {cells[int(x)] for x in
                 rng.choice(len(cells), rng.integers(1, len(cells) + 1),
                            replace=False)}
            m = metrics([a], [_gold(s)])
            assert abs(m.aer - (1.0 - m.f1)) < 1e-12

    def test_micro_average_over_corpus(self):
        hyp = [{(0, 0)}, {(0, 0), (0, 1)}]
        golds = [_gold({(0, 0)}), _gold({(0, 1)})]
        m = metrics(hyp, golds)
        assert m.n_links == 3 and m.n_sure == 2
        assert m.precision == pytest.approx(2 / 3)
        assert m.recall == pytest.approx(2 / 2)
        assert m.aer == pytest.approx(1 - (2 + 2) / (3 + 2))

    def test_length_mismatch_raises(self):
        with pytest.raises(DataError):
            metrics([set()], [])

    def test_sure_not_subset_raises(self):
        bad = GoldAlignment({(0, 0)}, {(1, 1)})
        with pytest.raises(DataError):
            metrics([set()], [bad])


class TestReporting:
    def test_format_summary_four_decimals(self):
        m = metrics([{(0, 0)}], [_gold({(0, 0)})])
        assert format_summary(m) == "1.0000 1.0000 1.0000 0.0000"

    def test_per_sentence_matches_single(self):
        hyp = [{(0, 0)}, set(), {(1, 1)}]
        golds = [_gold({(0, 0)}), _gold({(0, 1)}), _gold({(0, 0)})]
        per = per_sentence_report(hyp, golds)
        assert len(per) == 3
        for links, gold, m in zip(hyp, golds, per):
            single = metrics([links], [gold])
            assert m == single
