"""Rectangular lattice geometry with rook-plus-self neighborhoods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class LatticeGeom:
    """Tiles and their neighborhoods.

    ``neighbors[i]`` lists every tile ``j`` with ``i ~ j``, the tile itself
    included. ``n`` is the grid side for rectangular grids (``None`` for a
    generic adjacency). The row-normalized averaging operator is built once
    and reused for every neighborhood statistic.
    """

    n_tiles: int
    neighbors: tuple[np.ndarray, ...]
    n: int | None = None
    n_i: np.ndarray = field(init=False, repr=False)
    averaging: sparse.csr_matrix = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.neighbors) != self.n_tiles:
            raise InvalidArgumentError("neighbors must have one entry per tile")
        counts = np.array([len(nb) for nb in self.neighbors], dtype=np.int64)
        rows = np.repeat(np.arange(self.n_tiles), counts)
        cols = np.concatenate(self.neighbors) if self.n_tiles else np.empty(0, int)
        vals = np.repeat(1.0 / counts, counts)
        avg = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_tiles, self.n_tiles))
        counts.setflags(write=False)
        object.__setattr__(self, "n_i", counts)
        object.__setattr__(self, "averaging", avg)

    @classmethod
    def from_adjacency(cls, neighbors: Sequence[Sequence[int]], n: int | None = None) -> "LatticeGeom":
        """Build a geometry from any symmetric, self-inclusive adjacency list."""
        n_tiles = len(neighbors)
        if n_tiles == 0:
            raise InvalidArgumentError("adjacency must contain at least one tile")
        nbs = []
        for i, nb in enumerate(neighbors):
            arr = np.array(sorted(set(int(j) for j in nb)), dtype=np.int64)
            if arr.size and (arr[0] < 0 or arr[-1] >= n_tiles):
                raise InvalidArgumentError(f"tile {i} has an out-of-range neighbor")
            if i not in arr:
                raise InvalidArgumentError(f"tile {i} is missing from its own neighborhood")
            arr.setflags(write=False)
            nbs.append(arr)
        for i, nb in enumerate(nbs):
            for j in nb:
                if i not in nbs[j]:
                    raise InvalidArgumentError(f"adjacency is not symmetric: {i}~{j} but not {j}~{i}")
        return cls(n_tiles=n_tiles, neighbors=tuple(nbs), n=n)

    def tile_index(self, row: int, col: int) -> int:
        return row * self.n + col

    def tile_rowcol(self, i: int) -> tuple[int, int]:
        return divmod(i, self.n)


def build_grid(n: int) -> LatticeGeom:
    """Rook adjacency plus self on an ``n x n`` grid, tiles indexed row-major.

    Interior tiles get 5 neighbors, edge tiles 4 and corners 3; there is no
    wraparound.
    """
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"grid side must be a positive integer, got {n!r}")
    n = int(n)
    nbs = []
    for r in range(n):
        for c in range(n):
            nb = [r * n + c]
            if r > 0:
                nb.append((r - 1) * n + c)
            if r < n - 1:
                nb.append((r + 1) * n + c)
            if c > 0:
                nb.append(r * n + c - 1)
            if c < n - 1:
                nb.append(r * n + c + 1)
            arr = np.array(sorted(nb), dtype=np.int64)
            arr.setflags(write=False)
            nbs.append(arr)
    return LatticeGeom(n_tiles=n * n, neighbors=tuple(nbs), n=n)


def neighbor_mean_log(counts_prev, geom: LatticeGeom, i: int) -> float:
    """Average of ``log(1 + count)`` over the neighborhood of tile ``i``."""
    counts_prev = np.asarray(counts_prev)
    if counts_prev.shape != (geom.n_tiles,):
        raise InvalidArgumentError(
            f"expected {geom.n_tiles} tile counts, got shape {counts_prev.shape}"
        )
    if not 0 <= i < geom.n_tiles:
        raise InvalidArgumentError(f"tile index {i} out of range [0, {geom.n_tiles})")
    nb = geom.neighbors[i]
    return float(np.log1p(counts_prev[nb].astype(float)).sum() / nb.size)


def neighbor_mean_log_all(counts_prev, geom: LatticeGeom) -> np.ndarray:
    """Vectorized :func:`neighbor_mean_log` over the last axis (tiles)."""
    x = np.log1p(np.asarray(counts_prev, dtype=float))
    if x.shape[-1] != geom.n_tiles:
        raise InvalidArgumentError(
            f"last axis must have {geom.n_tiles} tiles, got {x.shape[-1]}"
        )
    flat = x.reshape(-1, geom.n_tiles)
    out = (geom.averaging @ flat.T).T
    return np.ascontiguousarray(out).reshape(x.shape)
