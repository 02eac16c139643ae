"""Exact Euclidean k-nearest-neighbor search by full scan."""

from __future__ import annotations

import numpy as np

from .errors import DataError

__all__ = ["NeighborIndex", "build", "query"]

# caps the (queries x points x d) difference tensor built per chunk
_CHUNK_ELEMS = 4_000_000


def _sq_dists(points: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # explicit differences, not the |p|^2 - 2pq + |q|^2 expansion: exact zeros
    # for duplicate rows matter for self-exclusion
    diff = Q[:, None, :] - points[None, :, :]
    return np.sum(diff * diff, axis=-1)


class NeighborIndex:
    """Immutable index over the rows of ``points``.

    Queries return ``(indices, distances)`` sorted by distance with ties
    broken by ascending row index.
    """

    def __init__(self, points):
        P = np.array(points, dtype=float)
        if P.ndim != 2 or P.shape[0] < 1:
            raise DataError(f"index needs a non-empty 2-D matrix, got shape {P.shape}")
        if not np.all(np.isfinite(P)):
            raise DataError("index points must be finite")
        P.setflags(write=False)
        self.points = P

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def _check(self, Q: np.ndarray) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = Q[None, :]
        if Q.ndim != 2 or Q.shape[1] != self.d:
            raise DataError(f"query dimension {Q.shape[-1]} != index dimension {self.d}")
        return Q

    def query(self, q, k: int, exclude_exact_match: bool = False):
        """Nearest ``min(k, available)`` rows to a single vector ``q``."""
        idx, dist = self.query_batch(q, k, exclude_exact_match)
        return idx[0], dist[0]

    def query_batch(self, Q, k: int, exclude_exact_match: bool = False):
        """Row-wise :meth:`query` over a matrix of queries.

        Returns lists of arrays (row results may differ in length when
        exact matches are excluded).
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        Q = self._check(Q)
        out_idx, out_dist = [], []
        step = max(1, _CHUNK_ELEMS // max(1, self.m * self.d))
        for s in range(0, Q.shape[0], step):
            # order on the reported distance so index breaks ties the sqrt creates
            Dist = np.sqrt(_sq_dists(self.points, Q[s : s + step]))
            for row in Dist:
                order = np.argsort(row, kind="stable")
                if exclude_exact_match:
                    order = order[row[order] > 0]
                order = order[:k]
                out_idx.append(order)
                out_dist.append(row[order])
        return out_idx, out_dist

    def kth_distance(self, Q, k: int) -> np.ndarray:
        """Distance from each query row to its k-th nearest indexed row."""
        if not 1 <= k <= self.m:
            raise ValueError(f"k must be in [1, {self.m}], got {k}")
        Q = self._check(Q)
        out = np.empty(Q.shape[0])
        step = max(1, _CHUNK_ELEMS // max(1, self.m * self.d))
        for s in range(0, Q.shape[0], step):
            D2 = _sq_dists(self.points, Q[s : s + step])
            out[s : s + step] = np.sqrt(np.partition(D2, k - 1, axis=1)[:, k - 1])
        return out


def build(points) -> NeighborIndex:
    return NeighborIndex(points)


def query(index: NeighborIndex, q, k: int, exclude_exact_match: bool = False):
    """Ordered ``[(row, distance), ...]`` for a single query vector."""
    idx, dist = index.query(q, k, exclude_exact_match)
    return [(int(i), float(x)) for i, x in zip(idx, dist)]
