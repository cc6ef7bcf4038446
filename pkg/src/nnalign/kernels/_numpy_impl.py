"""Numpy fallback for the lookup-table kernels."""

import numpy as np

BACKEND = "numpy"


def gather_rows(table, ids):
    """Return ``table[ids]`` as a new (len(ids), width) array."""
    return table[np.asarray(ids, dtype=np.intp)]


def scatter_add_rows(out, ids, rows):
    """Accumulate ``rows[k]`` into ``out[ids[k]]``; duplicates add up."""
    np.add.at(out, np.asarray(ids, dtype=np.intp), rows)
