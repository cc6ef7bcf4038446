"""Window-encoder networks and alignment score computation.

Each side of a sentence pair has its own encoder: lookup tables for word,
POS, character and (source side only) diagonal-distance features, a first
convolution M1 applied k2 times over consecutive k1-token spans, a tanh,
and a projection M2 down to the shared d_emb space. The score of a link
(i, j) is the dot product of the two window encodings.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import UNK_CHAR, DataError, Sentence, Vocabulary

MAGIC = b"NNALIGN1"
FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Inconsistent encoder or model configuration."""


@dataclass
class EncoderConfig:
    """Hyperparameters of one window encoder."""

    k1: int = 3
    k2: int = 3
    d_emb_word: int = 128
    d_hu: int = 256
    d_emb: int = 256
    use_pos: bool = False
    use_char: bool = False
    use_diag: bool = False
    d_emb_pos: int = 32
    d_emb_char: int = 128
    d_emb_diag: int = 32
    diag_bins: int = 20
    max_word_len: int = 20
    char_vocab: dict[str, int] | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.k1 + self.k2) % 2 != 0:
            raise ConfigError("k1 + k2 must be even so windows can be centered")
        for name in ("k1", "k2", "d_emb_word", "d_hu", "d_emb"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.use_diag and self.diag_bins < 1:
            raise ConfigError("diag_bins must be >= 1")
        if self.use_char and not self.char_vocab:
            raise ConfigError("use_char requires a char_vocab")

    @property
    def d_win(self) -> int:
        return self.k1 + self.k2 - 1

    @property
    def pad_count(self) -> int:
        """Padding tokens added at each sentence end."""
        return (self.k1 + self.k2) // 2 - 1

    @property
    def d_in(self) -> int:
        """Concatenated per-token feature width."""
        d = self.d_emb_word
        if self.use_pos:
            d += self.d_emb_pos
        if self.use_char:
            d += self.d_emb_char
        if self.use_diag:
            d += self.d_emb_diag
        return d

    def to_dict(self) -> dict:
        chars = None
        if self.char_vocab:
            inv = sorted(self.char_vocab.items(), key=lambda kv: kv[1])
            chars = "".join(ch for ch, cid in inv if cid != 0)
        return {
            "k1": self.k1,
            "k2": self.k2,
            "d_emb_word": self.d_emb_word,
            "d_hu": self.d_hu,
            "d_emb": self.d_emb,
            "use_pos": self.use_pos,
            "use_char": self.use_char,
            "use_diag": self.use_diag,
            "d_emb_pos": self.d_emb_pos,
            "d_emb_char": self.d_emb_char,
            "d_emb_diag": self.d_emb_diag,
            "diag_bins": self.diag_bins,
            "max_word_len": self.max_word_len,
            "chars": chars,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        d = dict(d)
        chars = d.pop("chars", None)
        char_vocab = None
        if chars is not None:
            char_vocab = {UNK_CHAR: 0}
            for ch in chars:
                char_vocab[ch] = len(char_vocab)
        return cls(char_vocab=char_vocab, **d)


def window(token_ids, i: int, d_win: int, pad_id: int) -> np.ndarray:
    """Length-d_win id window centered at i; out-of-range slots get pad_id."""
    token_ids = np.asarray(token_ids)
    n = len(token_ids)
    if not 0 <= i < n:
        raise IndexError(f"window center {i} out of range for length {n}")
    if d_win % 2 != 1:
        raise ValueError("d_win must be odd")
    half = d_win // 2
    out = np.full(d_win, pad_id, dtype=np.intp)
    lo, hi = max(0, i - half), min(n, i + half + 1)
    out[lo - (i - half) : hi - (i - half)] = token_ids[lo:hi]
    return out


def diag_bin(i: int, j: int, e_len: int, f_len: int, diag_bins: int) -> int:
    """Discretized distance to the diagonal for 1-based positions i, j."""
    d = abs(i / e_len - j / f_len)
    d = min(max(d, 0.0), 1.0)
    return min(int(d * diag_bins), diag_bins - 1)


def _diag_bin_matrix(positions, e_len, f_len, diag_bins) -> np.ndarray:
    """diag_bin over all (position, source index) combinations, 0-based in."""
    i = (np.asarray(positions, dtype=np.float64) + 1.0) / e_len
    j = (np.arange(1, f_len + 1, dtype=np.float64)) / f_len
    d = np.clip(np.abs(i[:, None] - j[None, :]), 0.0, 1.0)
    return np.minimum((d * diag_bins).astype(np.intp), diag_bins - 1)


def char_row_ids(word: str, char_vocab: dict[str, int], max_word_len: int) -> np.ndarray:
    """Lookup-table rows for the character-position features of a word.

    A char c at position k (0-based) selects row k * |C| + id(c); unknown
    characters map to the reserved id 0.
    """
    n_chars = len(char_vocab)
    word = word[:max_word_len]
    return np.array(
        [k * n_chars + char_vocab.get(ch, 0) for k, ch in enumerate(word)],
        dtype=np.intp,
    )


def char_embed(word: str, w_char: np.ndarray, char_vocab: dict[str, int],
               max_word_len: int) -> np.ndarray:
    """Mean of the character-position rows for a word; empty gives zeros."""
    rows = char_row_ids(word, char_vocab, max_word_len)
    if len(rows) == 0:
        return np.zeros(w_char.shape[1], dtype=w_char.dtype)
    return kernels.gather_rows(w_char, rows).mean(axis=0)


@dataclass
class WindowBatch:
    """A batch of token windows plus the feature ids each one carries."""

    word_ids: np.ndarray  # (n, d_win)
    pos_ids: np.ndarray | None = None
    surfaces: list[tuple[str, ...]] | None = None
    diag_bins: np.ndarray | None = None  # (n,), source side only

    def __len__(self):
        return self.word_ids.shape[0]

    def take(self, idx, diag_bins=None) -> "WindowBatch":
        idx = np.asarray(idx, dtype=np.intp)
        return WindowBatch(
            self.word_ids[idx],
            None if self.pos_ids is None else self.pos_ids[idx],
            None if self.surfaces is None else [self.surfaces[k] for k in idx],
            diag_bins,
        )


class WindowEncoder:
    """One side's parameters and the forward/backward pass of Eq-style
    window encoding: lookup -> conv (M1 over k1-spans, k2 times) -> tanh
    -> projection (M2)."""

    TABLE_NAMES = ("W", "W_pos", "W_char", "W_diag")

    def __init__(self, config: EncoderConfig, vocab_size: int,
                 pos_vocab_size: int = 0, rng=None, dtype=np.float32):
        if config.use_pos and pos_vocab_size < 1:
            raise ConfigError("use_pos requires a POS vocabulary")
        self.config = config
        self.vocab_size = vocab_size
        self.pos_vocab_size = pos_vocab_size
        self.dtype = np.dtype(dtype)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.params: dict[str, np.ndarray] = {}

        def init(name, shape):
            self.params[name] = rng.uniform(-0.05, 0.05, size=shape).astype(self.dtype)

        c = config
        init("W", (vocab_size, c.d_emb_word))
        if c.use_pos:
            init("W_pos", (pos_vocab_size, c.d_emb_pos))
        if c.use_char:
            init("W_char", (c.max_word_len * len(c.char_vocab), c.d_emb_char))
        if c.use_diag:
            init("W_diag", (c.diag_bins, c.d_emb_diag))
        init("M1", (c.d_hu, c.d_in * c.k1))
        init("M2", (c.d_emb, c.k2 * c.d_hu))

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(p) for name, p in self.params.items()}

    def _feature_matrix(self, batch: WindowBatch):
        """Concatenate per-token feature embeddings into (n, d_win, d_in)."""
        c = self.config
        n, d_win = batch.word_ids.shape
        if d_win != c.d_win:
            raise ConfigError(f"window width {d_win} != configured {c.d_win}")
        parts = [kernels.gather_rows(self.params["W"], batch.word_ids.ravel())
                 .reshape(n, d_win, c.d_emb_word)]
        char_info = None
        if c.use_pos:
            if batch.pos_ids is None:
                raise ConfigError("use_pos enabled but batch has no POS ids")
            parts.append(
                kernels.gather_rows(self.params["W_pos"], batch.pos_ids.ravel())
                .reshape(n, d_win, c.d_emb_pos)
            )
        if c.use_char:
            if batch.surfaces is None:
                raise ConfigError("use_char enabled but batch has no surfaces")
            flat = [w[:c.max_word_len] for tup in batch.surfaces for w in tup]
            slots: dict[str, int] = {}
            slot_ids = np.empty(len(flat), dtype=np.intp)
            for k, w in enumerate(flat):
                if w:
                    slot_ids[k] = slots.setdefault(w, len(slots))
                else:
                    slot_ids[k] = -1
            rows_per_word = [
                char_row_ids(w, c.char_vocab, c.max_word_len) for w in slots
            ]
            w_char = self.params["W_char"]
            vecs = np.zeros((len(slots) + 1, c.d_emb_char), dtype=self.dtype)
            for s, rows in enumerate(rows_per_word):
                vecs[s] = kernels.gather_rows(w_char, rows).mean(axis=0)
            parts.append(vecs[slot_ids].reshape(n, d_win, c.d_emb_char))
            char_info = (slot_ids, rows_per_word)
        if c.use_diag:
            if batch.diag_bins is None:
                raise ConfigError("use_diag enabled but batch has no diag bins")
            diag_vecs = kernels.gather_rows(self.params["W_diag"], batch.diag_bins)
            parts.append(np.broadcast_to(
                diag_vecs[:, None, :], (n, d_win, c.d_emb_diag)
            ).copy())
        return np.concatenate(parts, axis=2), char_info

    def forward(self, batch: WindowBatch):
        """Encode a window batch; returns (outputs (n, d_emb), cache)."""
        c = self.config
        x, char_info = self._feature_matrix(batch)
        n = x.shape[0]
        spans = np.empty((n, c.k2, c.k1 * c.d_in), dtype=self.dtype)
        for t in range(c.k2):
            spans[:, t, :] = x[:, t : t + c.k1, :].reshape(n, -1)
        z = spans.reshape(n * c.k2, -1) @ self.params["M1"].T
        h = np.tanh(z.reshape(n, c.k2 * c.d_hu))
        out = h @ self.params["M2"].T
        return out, (batch, spans, h, char_info)

    def encode(self, batch: WindowBatch) -> np.ndarray:
        return self.forward(batch)[0]

    def backward(self, cache, dout, grads: dict[str, np.ndarray]):
        """Accumulate parameter gradients for a forward pass."""
        c = self.config
        batch, spans, h, char_info = cache
        n = len(batch)
        dout = dout.astype(self.dtype, copy=False)
        grads["M2"] += dout.T @ h
        dh = dout @ self.params["M2"]
        dz = (dh * (1.0 - h * h)).reshape(n, c.k2, c.d_hu)
        grads["M1"] += np.einsum("nth,ntk->hk", dz, spans)
        dspans = np.einsum("nth,hk->ntk", dz, self.params["M1"])
        dx = np.zeros((n, c.d_win, c.d_in), dtype=self.dtype)
        for t in range(c.k2):
            dx[:, t : t + c.k1, :] += dspans[:, t, :].reshape(n, c.k1, c.d_in)

        col = 0
        kernels.scatter_add_rows(
            grads["W"], batch.word_ids.ravel(),
            dx[:, :, col : col + c.d_emb_word].reshape(-1, c.d_emb_word),
        )
        col += c.d_emb_word
        if c.use_pos:
            kernels.scatter_add_rows(
                grads["W_pos"], batch.pos_ids.ravel(),
                dx[:, :, col : col + c.d_emb_pos].reshape(-1, c.d_emb_pos),
            )
            col += c.d_emb_pos
        if c.use_char:
            slot_ids, rows_per_word = char_info
            dflat = dx[:, :, col : col + c.d_emb_char].reshape(-1, c.d_emb_char)
            order = np.argsort(slot_ids, kind="stable")
            bounds = np.searchsorted(slot_ids[order], np.arange(len(rows_per_word) + 1))
            for s, rows in enumerate(rows_per_word):
                sel = order[bounds[s] : bounds[s + 1]]
                if len(sel) == 0:
                    continue
                dvec = dflat[sel].sum(axis=0) / len(rows)
                kernels.scatter_add_rows(
                    grads["W_char"], rows,
                    np.repeat(dvec[None, :], len(rows), axis=0),
                )
            col += c.d_emb_char
        if c.use_diag:
            ddiag = dx[:, :, col : col + c.d_emb_diag].sum(axis=1)
            kernels.scatter_add_rows(grads["W_diag"], batch.diag_bins, ddiag)


@dataclass
class TargetWindows:
    """Target-side windows plus the positions they came from (for diag)."""

    batch: WindowBatch
    positions: np.ndarray
    e_len: int


def sentence_windows(sentence: Sentence, config: EncoderConfig,
                     vocab: Vocabulary, pos_vocab: Vocabulary | None = None
                     ) -> WindowBatch:
    """All centered windows of a sentence, padded at both ends."""
    d_win, half = config.d_win, config.pad_count
    n = len(sentence)
    ids = np.concatenate([
        np.full(half, vocab.pad_id, dtype=np.intp),
        sentence.token_ids,
        np.full(half, vocab.pad_id, dtype=np.intp),
    ])
    word_ids = np.lib.stride_tricks.sliding_window_view(ids, d_win).copy()
    pos_ids = None
    if config.use_pos:
        if sentence.pos_ids is None:
            raise ConfigError("use_pos enabled but sentence has no POS ids")
        if pos_vocab is None:
            raise ConfigError("use_pos enabled but no POS vocabulary given")
        pids = np.concatenate([
            np.full(half, pos_vocab.pad_id, dtype=np.intp),
            sentence.pos_ids,
            np.full(half, pos_vocab.pad_id, dtype=np.intp),
        ])
        pos_ids = np.lib.stride_tricks.sliding_window_view(pids, d_win).copy()
    surfaces = None
    if config.use_char:
        padded = ("",) * half + sentence.surface + ("",) * half
        surfaces = [padded[i : i + d_win] for i in range(n)]
    return WindowBatch(word_ids, pos_ids, surfaces, None)


class AlignmentModel:
    """The two encoders plus the vocabularies they were built against."""

    def __init__(self, config_e: EncoderConfig, config_f: EncoderConfig,
                 vocab_e: Vocabulary, vocab_f: Vocabulary,
                 pos_vocab_e: Vocabulary | None = None,
                 pos_vocab_f: Vocabulary | None = None,
                 seed: int = 0, dtype=np.float32):
        if config_e.use_diag:
            raise ConfigError("the diag feature applies to the source side only")
        if config_e.d_emb != config_f.d_emb:
            raise ConfigError("both encoders must share d_emb")
        self.vocab_e = vocab_e
        self.vocab_f = vocab_f
        self.pos_vocab_e = pos_vocab_e
        self.pos_vocab_f = pos_vocab_f
        rng = np.random.default_rng(seed)
        self.enc_e = WindowEncoder(
            config_e, len(vocab_e),
            len(pos_vocab_e) if pos_vocab_e else 0, rng, dtype)
        self.enc_f = WindowEncoder(
            config_f, len(vocab_f),
            len(pos_vocab_f) if pos_vocab_f else 0, rng, dtype)

    @property
    def dtype(self):
        return self.enc_e.dtype

    def zero_grads(self) -> dict[str, np.ndarray]:
        grads = {f"e.{k}": g for k, g in self.enc_e.zero_grads().items()}
        grads.update({f"f.{k}": g for k, g in self.enc_f.zero_grads().items()})
        return grads

    def sgd_update(self, grads: dict[str, np.ndarray], learning_rate: float):
        for name, g in grads.items():
            side, pname = name.split(".", 1)
            enc = self.enc_e if side == "e" else self.enc_f
            enc.params[pname] -= self.dtype.type(learning_rate) * g

    def named_params(self):
        for k, p in self.enc_e.params.items():
            yield f"e.{k}", p
        for k, p in self.enc_f.params.items():
            yield f"f.{k}", p

    def target_windows(self, sentence: Sentence) -> TargetWindows:
        batch = sentence_windows(sentence, self.enc_e.config,
                                 self.vocab_e, self.pos_vocab_e)
        return TargetWindows(batch, np.arange(len(sentence)), len(sentence))

    def source_windows(self, sentence: Sentence) -> WindowBatch:
        return sentence_windows(sentence, self.enc_f.config,
                                self.vocab_f, self.pos_vocab_f)

    def score_matrix(self, target: Sentence, source: Sentence) -> np.ndarray:
        """Dense |e| x |f| matrix of link scores for one sentence pair."""
        s, _ = scored_pair(self, self.target_windows(target), source)
        return s


def scored_pair(model: AlignmentModel, twin: TargetWindows, source: Sentence):
    """Score every (target window, source position) combination.

    When the diag feature is on, source encodings are computed once per
    distinct (source position, diag bin) pair rather than per matrix cell.
    Returns (scores, ctx); ctx feeds scored_pair_backward.
    """
    enc_f = model.enc_f
    u, cache_e = model.enc_e.forward(twin.batch)
    f_all = model.source_windows(source)
    f_len = len(source)
    if enc_f.config.use_diag:
        bins = _diag_bin_matrix(twin.positions, twin.e_len, f_len,
                                enc_f.config.diag_bins)
        keys = np.arange(f_len)[None, :] * enc_f.config.diag_bins + bins
        uniq, inv = np.unique(keys.ravel(), return_inverse=True)
        inv = inv.reshape(keys.shape)
        f_batch = f_all.take(uniq // enc_f.config.diag_bins,
                             diag_bins=(uniq % enc_f.config.diag_bins).astype(np.intp))
        v, cache_f = enc_f.forward(f_batch)
        scores = np.einsum("id,ijd->ij", u, v[inv])
    else:
        inv = None
        v, cache_f = enc_f.forward(f_all)
        scores = u @ v.T
    ctx = (model, cache_e, cache_f, u, v, inv)
    return scores, ctx


def scored_pair_backward(ctx, dscores, grads: dict[str, np.ndarray]):
    """Backpropagate d(loss)/d(scores) into both encoders' gradients."""
    model, cache_e, cache_f, u, v, inv = ctx
    dscores = dscores.astype(u.dtype, copy=False)
    if inv is None:
        du = dscores @ v
        dv = dscores.T @ u
    else:
        du = np.einsum("ij,ijd->id", dscores, v[inv])
        dv = np.zeros_like(v)
        kernels.scatter_add_rows(
            dv, inv.ravel(),
            (dscores[:, :, None] * u[:, None, :]).reshape(-1, u.shape[1]),
        )
    e_grads = {k.split(".", 1)[1]: g for k, g in grads.items() if k.startswith("e.")}
    f_grads = {k.split(".", 1)[1]: g for k, g in grads.items() if k.startswith("f.")}
    model.enc_e.backward(cache_e, du, e_grads)
    model.enc_f.backward(cache_f, dv, f_grads)


def _vocab_meta(vocab: Vocabulary | None):
    if vocab is None:
        return None
    return {"size": len(vocab), "hash": vocab.token_hash()}


def save_model(model: AlignmentModel, path):
    """Write the model container: header + row-major float32 matrices."""
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": "float32",
        "config_e": model.enc_e.config.to_dict(),
        "config_f": model.enc_f.config.to_dict(),
        "vocab_e": _vocab_meta(model.vocab_e),
        "vocab_f": _vocab_meta(model.vocab_f),
        "pos_vocab_e": _vocab_meta(model.pos_vocab_e),
        "pos_vocab_f": _vocab_meta(model.pos_vocab_f),
        "params": [[name, list(p.shape)] for name, p in model.named_params()],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for name, p in model.named_params():
            f.write(np.ascontiguousarray(p, dtype=np.float32).tobytes())


def _check_vocab(meta, vocab, what, path):
    if (meta is None) != (vocab is None):
        raise DataError(f"{path}: model {'needs' if meta else 'has no'} {what}")
    if meta is not None and meta["hash"] != vocab.token_hash():
        raise DataError(f"{path}: {what} hash mismatch")


def load_model(path, vocab_e: Vocabulary, vocab_f: Vocabulary,
               pos_vocab_e: Vocabulary | None = None,
               pos_vocab_f: Vocabulary | None = None) -> AlignmentModel:
    """Read a model container and verify it against the given vocabularies."""
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise DataError(f"{path}: not a model file")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        if header["format_version"] != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported format version")
        _check_vocab(header["vocab_e"], vocab_e, "target vocabulary", path)
        _check_vocab(header["vocab_f"], vocab_f, "source vocabulary", path)
        _check_vocab(header["pos_vocab_e"], pos_vocab_e, "target POS vocabulary", path)
        _check_vocab(header["pos_vocab_f"], pos_vocab_f, "source POS vocabulary", path)
        model = AlignmentModel(
            EncoderConfig.from_dict(header["config_e"]),
            EncoderConfig.from_dict(header["config_f"]),
            vocab_e, vocab_f, pos_vocab_e, pos_vocab_f,
            dtype=np.dtype(header["dtype"]),
        )
        params = dict(model.named_params())
        for name, shape in header["params"]:
            if name not in params or list(params[name].shape) != shape:
                raise DataError(f"{path}: unexpected parameter {name} {shape}")
            buf = f.read(int(np.prod(shape)) * 4)
            arr = np.frombuffer(buf, dtype=np.float32).reshape(shape)
            params[name][...] = arr
    return model
