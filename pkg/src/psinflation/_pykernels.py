"""Numpy implementations of the integer kernels, used when the extension is absent."""
import numpy as np


def canonicalize_tables(tables, maps):
    """Lexicographic minimum of ``tables[v, maps[g]]`` over all ``g``."""
    tables = np.asarray(tables, dtype=np.uint8)
    maps = np.asarray(maps, dtype=np.intp)
    best = tables[:, maps[0]].copy()
    rows = np.arange(tables.shape[0])
    for g in range(1, maps.shape[0]):
        cand = tables[:, maps[g]]
        diff = cand != best
        first = diff.argmax(axis=1)
        less = diff.any(axis=1) & (cand[rows, first] < best[rows, first])
        best[less] = cand[less]
    return best


def outcome_histogram(tables, positions, radix, nrows, chunk=4096):
    """``counts[v, r]`` = number of rows ``k`` with ``sum_a tables[v, positions[k, a]] * radix[a] == r``."""
    tables = np.asarray(tables, dtype=np.uint8)
    positions = np.asarray(positions, dtype=np.intp)
    radix = np.asarray(radix, dtype=np.int64)
    V = tables.shape[0]
    counts = np.zeros((V, nrows), dtype=np.int64)
    for start in range(0, V, chunk):
        block = tables[start:start + chunk]
        idx = (block[:, positions].astype(np.int64) * radix).sum(axis=-1)
        idx += (np.arange(block.shape[0], dtype=np.int64) * nrows)[:, None]
        counts[start:start + block.shape[0]] = np.bincount(
            idx.ravel(), minlength=block.shape[0] * nrows).reshape(-1, nrows)
    return counts
