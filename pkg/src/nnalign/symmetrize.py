"""Symmetrization of two directional alignments.

Both input alignments are expressed in the same (target, source) frame;
reverse-direction Pharaoh files are transposed before they get here.
"""

from __future__ import annotations

from dataclasses import dataclass

HEURISTICS = ("intersect", "union", "grow-diag", "gdf", "gdfa")

# 8-connected neighborhood, diagonals included.
NEIGHBORS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)


@dataclass
class DirectionalPair:
    """Forward and (transposed) reverse alignments for one sentence pair."""

    e2f: set[tuple[int, int]]
    f2e: set[tuple[int, int]]
    e_len: int | None = None
    f_len: int | None = None

    def __post_init__(self):
        if self.e_len is not None and self.f_len is not None:
            for i, j in self.e2f | self.f2e:
                if not (0 <= i < self.e_len and 0 <= j < self.f_len):
                    raise ValueError(f"link ({i},{j}) out of bounds")


def transpose(links) -> set[tuple[int, int]]:
    return {(j, i) for i, j in links}


def _grow_diag(links: set, union: set):
    """Grow the intersection with union links adjacent to current links.

    Links are scanned in sorted (target, source) order; the scan restarts
    after every addition until a fixpoint is reached. A candidate is added
    only while at least one of its two words is still unaligned.
    """
    aligned_e = {i for i, _ in links}
    aligned_f = {j for _, j in links}
    changed = True
    while changed:
        changed = False
        for i, j in sorted(links):
            for di, dj in NEIGHBORS:
                cand = (i + di, j + dj)
                if cand in union and cand not in links and (
                    cand[0] not in aligned_e or cand[1] not in aligned_f
                ):
                    links.add(cand)
                    aligned_e.add(cand[0])
                    aligned_f.add(cand[1])
                    changed = True
                    break
            if changed:
                break


def _final(links: set, candidates, require_both: bool):
    """Add leftover union links whose words are (both/either) unaligned.

    Freeness is judged against the grow-diag result, not updated as links
    are added; this keeps final-and additions a subset of final additions.
    """
    aligned_e = {i for i, _ in links}
    aligned_f = {j for _, j in links}
    added = set()
    for i, j in candidates:
        if (i, j) in links:
            continue
        if require_both:
            ok = i not in aligned_e and j not in aligned_f
        else:
            ok = i not in aligned_e or j not in aligned_f
        if ok:
            added.add((i, j))
    links |= added


def symmetrize(pair: DirectionalPair, heuristic: str) -> set[tuple[int, int]]:
    """Combine the two directions with the named heuristic."""
    if heuristic not in HEURISTICS:
        raise ValueError(f"unknown heuristic {heuristic!r}")
    e2f, f2e = pair.e2f, pair.f2e
    union = e2f | f2e
    if heuristic == "intersect":
        return e2f & f2e
    if heuristic == "union":
        return set(union)
    links = e2f & f2e
    _grow_diag(links, union)
    if heuristic in ("gdf", "gdfa"):
        _final(links, sorted(e2f) + sorted(f2e), heuristic == "gdfa")
    return links
