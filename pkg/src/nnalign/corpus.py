"""Corpus ingestion: vocabularies, sentence encoding, gold alignments,
negative sampling, and the Pharaoh / gold alignment file formats.

Conventions:
  * parallel text: one tokenized sentence per line, UTF-8, space separated
  * tagged text: each token written as ``surface|TAG``
  * gold alignments: lines ``sntNo tgtPos srcPos [S|P]``, 1-indexed,
    missing flag means S
  * hypothesis alignments: Pharaoh format, ``tgtIdx-srcIdx`` pairs, 0-indexed
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

UNK_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"
UNK_CHAR = "\x00"


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass
class Vocabulary:
    """Bidirectional token/id map with reserved UNK and PAD entries."""

    tokens: list[str]
    index: dict[str, int] = field(repr=False)
    unk_id: int
    pad_id: int

    def __len__(self):
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def token_hash(self) -> str:
        h = hashlib.sha256("\n".join(self.tokens).encode("utf-8"))
        return h.hexdigest()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.tokens:
                f.write(tok + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            tokens = [line.rstrip("\n") for line in f]
        if not tokens:
            raise DataError(f"empty vocabulary file: {path}")
        index = {tok: k for k, tok in enumerate(tokens)}
        if UNK_TOKEN not in index or PAD_TOKEN not in index:
            raise DataError(f"vocabulary file missing reserved tokens: {path}")
        return cls(tokens, index, index[UNK_TOKEN], index[PAD_TOKEN])


def build_vocab(stream, max_size: int) -> Vocabulary:
    """Build a vocabulary of the ``max_size`` most frequent tokens.

    Frequency ties are broken by first occurrence, so identical streams
    always produce identical id assignments.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    for tok in stream:
        counts[tok] += 1
        if tok not in first_seen:
            first_seen[tok] = len(first_seen)
    counts.pop(UNK_TOKEN, None)
    counts.pop(PAD_TOKEN, None)
    if not counts:
        raise DataError("empty corpus")
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    tokens = [UNK_TOKEN, PAD_TOKEN] + ranked[:max_size]
    index = {tok: k for k, tok in enumerate(tokens)}
    return Vocabulary(tokens, index, unk_id=0, pad_id=1)


def build_char_vocab(stream) -> dict[str, int]:
    """Character/id map over all surface tokens; id 0 is the unknown char."""
    chars = sorted({ch for tok in stream for ch in tok} - {UNK_CHAR})
    vocab = {UNK_CHAR: 0}
    for ch in chars:
        vocab[ch] = len(vocab)
    return vocab


@dataclass
class Sentence:
    """One side of a sentence pair: ids plus retained surface forms."""

    token_ids: np.ndarray
    surface: tuple[str, ...]
    pos_ids: np.ndarray | None = None

    def __len__(self):
        return len(self.token_ids)


def encode(tokens, vocab: Vocabulary, pos_tags=None, pos_vocab=None) -> Sentence:
    """Map surface tokens (and optional POS tags) to vocabulary ids."""
    tokens = list(tokens)
    if not tokens:
        raise DataError("empty sentence")
    ids = np.array([vocab.lookup(t) for t in tokens], dtype=np.intp)
    pos_ids = None
    if pos_tags is not None:
        if pos_vocab is None:
            raise ValueError("pos_tags given without pos_vocab")
        if len(pos_tags) != len(tokens):
            raise DataError("POS tag count does not match token count")
        pos_ids = np.array([pos_vocab.lookup(t) for t in pos_tags], dtype=np.intp)
    return Sentence(ids, tuple(tokens), pos_ids)


def decode(sentence: Sentence, vocab: Vocabulary) -> list[str]:
    """Inverse of encode up to OOV tokens, which come back as the UNK marker."""
    return [vocab.tokens[i] for i in sentence.token_ids]


@dataclass
class ParallelCorpus:
    """Aligned (target, source) sentence pairs."""

    pairs: list[tuple[Sentence, Sentence]]

    def __post_init__(self):
        if not self.pairs:
            raise DataError("empty corpus")

    def __len__(self):
        return len(self.pairs)


def sample_negative(corpus: ParallelCorpus, positive_index: int, rng) -> Sentence:
    """Target side of a uniformly random pair other than ``positive_index``."""
    n = len(corpus)
    if n < 2:
        raise DataError("cannot sample negative from a single-pair corpus")
    j = int(rng.integers(n - 1))
    if j >= positive_index:
        j += 1
    return corpus.pairs[j][0]


def sample_negative_source(corpus: ParallelCorpus, positive_index: int, rng) -> Sentence:
    """Source-side analogue of sample_negative, used for threshold statistics."""
    n = len(corpus)
    if n < 2:
        raise DataError("cannot sample negative from a single-pair corpus")
    j = int(rng.integers(n - 1))
    if j >= positive_index:
        j += 1
    return corpus.pairs[j][1]


def read_tokenized(path, tagged: bool = False):
    """Read one sentence per line; returns (tokens, tags-or-None) per line."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            raw = line.split()
            if not raw:
                raise DataError(f"{path} line {lineno}: empty sentence")
            if tagged:
                tokens, tags = [], []
                for tok in raw:
                    if "|" not in tok:
                        raise DataError(
                            f"{path} line {lineno}: token {tok!r} has no |TAG"
                        )
                    surface, tag = tok.rsplit("|", 1)
                    tokens.append(surface)
                    tags.append(tag)
                out.append((tokens, tags))
            else:
                out.append((raw, None))
    if not out:
        raise DataError(f"empty corpus: {path}")
    return out


def load_parallel(
    target_path,
    source_path,
    vocab_e: Vocabulary,
    vocab_f: Vocabulary,
    tagged: bool = False,
    pos_vocab_e: Vocabulary | None = None,
    pos_vocab_f: Vocabulary | None = None,
) -> ParallelCorpus:
    """Load and encode an aligned pair of (optionally tagged) text files."""
    tgt = read_tokenized(target_path, tagged)
    src = read_tokenized(source_path, tagged)
    if len(tgt) != len(src):
        raise DataError(
            f"line count mismatch: {target_path} has {len(tgt)}, "
            f"{source_path} has {len(src)}"
        )
    pairs = []
    for (e_toks, e_tags), (f_toks, f_tags) in zip(tgt, src):
        e = encode(e_toks, vocab_e, e_tags, pos_vocab_e)
        f = encode(f_toks, vocab_f, f_tags, pos_vocab_f)
        pairs.append((e, f))
    return ParallelCorpus(pairs)


@dataclass
class GoldAlignment:
    """Gold links for one sentence pair; sure is a subset of possible."""

    sure: set[tuple[int, int]] = field(default_factory=set)
    possible: set[tuple[int, int]] = field(default_factory=set)


def load_gold(path) -> dict[int, GoldAlignment]:
    """Parse a gold alignment file into 0-indexed link sets per sentence.

    S links are duplicated into the possible set so sure <= possible holds
    by construction. Index bounds are checked at evaluation time, not here.
    """
    gold: dict[int, GoldAlignment] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) not in (3, 4):
                raise DataError(f"{path} line {lineno}: expected 3 or 4 fields")
            try:
                snt, tgt, src = (int(x) for x in fields[:3])
            except ValueError:
                raise DataError(f"{path} line {lineno}: non-integer field") from None
            if snt < 1 or tgt < 1 or src < 1:
                raise DataError(f"{path} line {lineno}: indices are 1-based")
            flag = fields[3] if len(fields) == 4 else "S"
            if flag not in ("S", "P"):
                raise DataError(f"{path} line {lineno}: bad flag {flag!r}")
            entry = gold.setdefault(snt - 1, GoldAlignment())
            link = (tgt - 1, src - 1)
            entry.possible.add(link)
            if flag == "S":
                entry.sure.add(link)
    return gold


def write_gold(gold: dict[int, GoldAlignment], path):
    with open(path, "w", encoding="utf-8") as f:
        for snt in sorted(gold):
            entry = gold[snt]
            for tgt, src in sorted(entry.possible):
                flag = "S" if (tgt, src) in entry.sure else "P"
                f.write(f"{snt + 1} {tgt + 1} {src + 1} {flag}\n")


def read_pharaoh(path) -> list[set[tuple[int, int]]]:
    """Read Pharaoh alignments, one link set per line (lines may be blank)."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            links = set()
            for item in line.split():
                try:
                    a, b = item.split("-")
                    links.add((int(a), int(b)))
                except ValueError:
                    raise DataError(
                        f"{path} line {lineno}: bad link {item!r}"
                    ) from None
            out.append(links)
    return out


def write_pharaoh(alignments, path):
    with open(path, "w", encoding="utf-8") as f:
        for links in alignments:
            f.write(" ".join(f"{i}-{j}" for i, j in sorted(links)) + "\n")
