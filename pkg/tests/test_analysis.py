"""Nearest source windows and top-scoring target word types, checked
against exhaustive hand computations on tiny models."""

import numpy as np
import pytest

from nnalign.analysis import nearest_source_windows, top_target_words
from nnalign.corpus import DataError, encode
from nnalign.model import WindowBatch
from tests.conftest import make_vocab, small_model


def _source_sentences(vocab_f, token_lists):
    return [encode(tokens, vocab_f) for tokens in token_lists]


def _window_vec(model, word):
    """Encode one single-token source window directly (k1 = 1 models)."""
    ids = np.array([[model.vocab_f.lookup(word)]], dtype=np.intp)
    return np.asarray(model.enc_f.encode(WindowBatch(ids)), dtype=np.float64)[0]


@pytest.fixture
def analysis_setup(tiny_vocabs):
    vocab_e, vocab_f = tiny_vocabs
    model = small_model(vocab_e, vocab_f, seed=7)
    sources = _source_sentences(vocab_f,
                                [["s0", "s1"], ["s2", "s1"], ["s3"]])
    targets = [encode(t, vocab_e)
               for t in (["t0", "t1"], ["t2"], ["t1", "t3"])]
    query = encode(["s2"], vocab_f)
    return model, sources, targets, query


class TestNearestSourceWindows:
    def test_query_in_corpus_is_first_with_zero_distance(self, analysis_setup):
        model, sources, _, query = analysis_setup
        out = nearest_source_windows(model, sources, query, 2)
        assert out[0][0] == ("s2",)
        assert out[0][1] == pytest.approx(0.0, abs=1e-12)

    def test_exhaustive_distance_oracle(self, analysis_setup):
        model, sources, _, query = analysis_setup
        out = nearest_source_windows(model, sources, query, 4)
        qvec = _window_vec(model, "s2")
        expected = sorted(
            ((w,), float(np.linalg.norm(_window_vec(model, w) - qvec)))
            for w in ("s0", "s1", "s2", "s3"))
        expected.sort(key=lambda item: item[1])
        assert len(out) == 4
        for (surface, dist), (esurface, edist) in zip(out, expected):
            assert surface == esurface
            assert dist == pytest.approx(edist, abs=1e-12)
        assert [d for _, d in out] == sorted(d for _, d in out)

    def test_duplicate_windows_collapse(self, analysis_setup):
        model, _, _, query = analysis_setup
        vocab_f = model.vocab_f
        sources = _source_sentences(vocab_f, [["s1", "s1"], ["s1"]])
        with pytest.warns(UserWarning, match="1 distinct"):
            out = nearest_source_windows(model, sources, query, 5)
        assert [surface for surface, _ in out] == [("s1",)]

    def test_k_larger_than_corpus_warns(self, analysis_setup):
        model, sources, _, query = analysis_setup
        with pytest.warns(UserWarning, match="requested 10"):
            out = nearest_source_windows(model, sources, query, 10)
        assert len(out) == 4

    def test_wrong_query_width_raises(self, analysis_setup):
        model, sources, _, _ = analysis_setup
        bad = encode(["s0", "s1"], model.vocab_f)
        with pytest.raises(DataError, match="exactly 1"):
            nearest_source_windows(model, sources, bad, 1)

    def test_wider_window_query(self, tiny_vocabs):
        vocab_e, vocab_f = tiny_vocabs
        model = small_model(vocab_e, vocab_f, k1=3, seed=2)
        sources = _source_sentences(vocab_f, [["s0", "s1", "s2"]])
        query = encode(["s0", "s1", "s2"], vocab_f)
        out = nearest_source_windows(model, sources, query, 1)
        # The middle window of the sentence is exactly the query.
        assert out[0][0] == ("s0", "s1", "s2")
        assert out[0][1] == pytest.approx(0.0, abs=1e-12)


class TestTopTargetWords:
    def test_exhaustive_score_oracle(self, analysis_setup):
        model, _, targets, query = analysis_setup
        out = top_target_words(model, targets, query, 4)
        qvec = _window_vec(model, "s2")
        best = {}
        for target in targets:
            vecs = np.asarray(
                model.enc_e.encode(model.target_windows(target).batch),
                dtype=np.float64)
            for wid, vec in zip(target.token_ids, vecs):
                score = float(vec @ qvec)
                wid = int(wid)
                best[wid] = max(score, best.get(wid, -np.inf))
        expected = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
        assert len(out) == 4
        for (word, score), (wid, escore) in zip(out, expected):
            assert word == model.vocab_e.tokens[wid]
            assert score == pytest.approx(escore, abs=1e-12)

    def test_repeated_word_keeps_maximum(self, analysis_setup):
        model, _, _, query = analysis_setup
        targets = [encode(["t0", "t0"], model.vocab_e),
                   encode(["t0"], model.vocab_e)]
        out = top_target_words(model, targets, query, 1)
        assert len(out) == 1 and out[0][0] == "t0"

    def test_k_zero_returns_empty(self, analysis_setup):
        model, _, targets, query = analysis_setup
        assert top_target_words(model, targets, query, 0) == []

    def test_k_larger_than_types_warns(self, analysis_setup):
        model, _, targets, query = analysis_setup
        with pytest.warns(UserWarning, match="requested 9"):
            out = top_target_words(model, targets, query, 9)
        assert len(out) == 4  # t0, t1, t2, t3
