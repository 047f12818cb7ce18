"""Constraint repair by manipulating individuals instead of penalizing them.

Two transforms:

* ascending sort over a chosen subset of components, which removes the
  order defect of free crank angles;
* the reverse-and-reflect map ``L - reverse(sorted r)``, which turns four
  sorted link lengths that violate the Grashof inequality into four that
  satisfy it with the shortest link as crank.
"""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from mechsyn.errors import ConfigurationError, DegenerateRepair


def _index_array(s, dim):
    idx = np.asarray(s, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= dim):
        raise IndexError(f"index set {idx.tolist()} outside dimension {dim}")
    if np.unique(idx).size != idx.size:
        raise ValueError("index set contains duplicates")
    return idx


def sort_subset(x, s: Sequence[int]) -> np.ndarray:
    """Copy of ``x`` whose components at ``s`` hold their ascending sort.

    The sorted values are written back in the order the indices appear in
    ``s``; all other components are untouched.
    """
    x = np.array(x, dtype=np.float64)
    idx = _index_array(s, x.size)
    # numpy's default for float arrays is introsort; output, not algorithm, is the contract
    x[idx] = np.sort(x[idx])
    return x


def sort_subset_rows(X: np.ndarray, s: Sequence[int]) -> np.ndarray:
    """Row-wise :func:`sort_subset` on a 2-D array."""
    X = np.array(X, dtype=np.float64)
    idx = _index_array(s, X.shape[1])
    X[:, idx] = np.sort(X[:, idx], axis=1)
    return X


def check_crank_grashof(r, crank: float) -> bool:
    """True iff ``crank`` is the shortest link and 2 min + 2 max < sum."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (4,):
        raise ValueError("expected four link lengths")
    if np.any(r <= 0.0):
        raise ValueError("link lengths must be positive")
    lo, hi = r.min(), r.max()
    return bool(crank == lo and 2.0 * lo + 2.0 * hi < r.sum())


def grashof_repair(r, L) -> tuple[np.ndarray, int]:
    """Sorted link lengths satisfying the crank/Grashof conditions.

    Returns ``(links, crank_index)``. If the ascending sort of ``r`` already
    passes, it is returned as is; otherwise the result is
    ``L - reverse(sorted r)``. The crank is the shortest entry.

    Raises :class:`DegenerateRepair` when the result has a zero-length link or
    still fails the strict inequality (e.g. ``x1 + x4 == x2 + x3``).
    """
    r = np.asarray(r, dtype=np.float64)
    L = np.broadcast_to(np.asarray(L, dtype=np.float64), (4,))
    if r.shape != (4,):
        raise ValueError("expected four link lengths")
    if np.any(r <= 0.0) or np.any(r > L):
        raise ValueError("link lengths must satisfy 0 < r <= L")
    x = np.sort(r)
    if check_crank_grashof(x, x[0]):
        return x, 0
    links = L - x[::-1]
    if np.any(links <= 0.0):
        raise DegenerateRepair("repair produced a zero-length link")
    k = int(np.argmin(links))
    if not check_crank_grashof(links, links[k]):
        raise DegenerateRepair("repaired links sit on the Grashof boundary")
    return links, k


def place_links(original, links, crank_position: int = 1) -> np.ndarray:
    """Assign repaired lengths to link slots.

    The shortest value goes to ``crank_position``; the other slots receive
    the remaining values in the rank order of their original lengths.
    """
    original = np.asarray(original, dtype=np.float64)
    links = np.sort(np.asarray(links, dtype=np.float64))
    out = np.empty(4)
    out[crank_position] = links[0]
    others = [j for j in range(4) if j != crank_position]
    order = sorted(others, key=lambda j: (original[j], j))
    for value, j in zip(links[1:], order):
        out[j] = value
    return out


def make_elitist_init(
    bounds,
    link_indices: Sequence[int],
    L,
    crank_position: int = 1,
    max_attempts: int = 1000,
):
    """Init transform that makes every new individual a Grashof crank linkage.

    ``link_indices`` locate ``r1..r4`` in the design vector and
    ``crank_position`` is the slot (within those four) that is driven; the
    four-bar conventions here use ``r2``. Degenerate repairs are resampled
    uniformly from ``bounds`` over the link components, using the
    generator handed to the transform.
    """
    idx = np.asarray(link_indices, dtype=np.intp)
    if idx.shape != (4,):
        raise ConfigurationError("need exactly four link indices")
    if not 0 <= crank_position < 4:
        raise ConfigurationError("crank_position must be in 0..3")
    L = np.broadcast_to(np.asarray(L, dtype=np.float64), (4,)).copy()
    if np.any(L <= 0.0):
        raise ConfigurationError("link upper limits must be positive")
    lo = np.asarray(bounds.lower, dtype=np.float64)[idx]
    width = np.asarray(bounds.upper, dtype=np.float64)[idx] - lo

    def transform(x, rng: Optional[np.random.Generator] = None):
        x = np.array(x, dtype=np.float64)
        r = x[idx]
        for _ in range(max_attempts):
            try:
                links, _ = grashof_repair(r, L)
            except (DegenerateRepair, ValueError):
                if rng is None or not np.any(width > 0):
                    raise
                r = rng.random(4) * width + lo
                continue
            x[idx] = place_links(r, links, crank_position)
            return x
        raise ConfigurationError("could not draw a repairable set of links")

    transform.link_indices = tuple(int(i) for i in idx)
    transform.crank_index = int(idx[crank_position])
    return transform


def make_sort_init(s: Sequence[int]):
    """Init transform writing the components at ``s`` in ascending order."""
    idx = tuple(int(i) for i in s)

    def transform(x, rng=None):
        return sort_subset(x, idx)

    return transform


def compose(*transforms):
    """Apply init transforms left to right; ``None`` entries are skipped."""
    chain = [t for t in transforms if t is not None]
    if not chain:
        return None
    if len(chain) == 1:
        return chain[0]

    def transform(x, rng=None):
        for t in chain:
            x = t(x, rng)
        return x

    return transform
