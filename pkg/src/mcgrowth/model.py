"""Parameters, count data and the log-linear spatial autoregressive intensity.

The log-intensity for color ``c`` in tile ``i`` at time ``t`` is::

    v[t, c, i] = alpha[c] + sum_c' beta[c, c'] * S[t, c', i]

where ``S[t, c', i]`` is the neighborhood mean of ``log(1 + Y[t-1, c', j])``.

Free parameters are laid out color block by color block: for each response
color ``c`` the intercept ``alpha[c]`` followed by the unmasked entries of
row ``c`` of ``beta`` in column order. This is the ordering of every
covariance matrix, standard-error vector and score vector in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .lattice import LatticeGeom, neighbor_mean_log_all


@dataclass(frozen=True)
class Params:
    alpha: np.ndarray
    beta: np.ndarray
    mask: np.ndarray = None

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        k = alpha.size
        if k == 0:
            raise InvalidArgumentError("at least one color is required")
        beta = np.array(self.beta, dtype=float)
        if beta.shape != (k, k):
            raise InvalidArgumentError(f"beta must be {k}x{k}, got {beta.shape}")
        if self.mask is None:
            mask = np.ones((k, k), dtype=bool)
        else:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != (k, k):
                raise InvalidArgumentError(f"mask must be {k}x{k}, got {mask.shape}")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise InvalidArgumentError("parameters must be finite")
        beta = np.where(mask, beta, 0.0)
        for arr in (alpha, beta, mask):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mask", mask)

    @property
    def n_colors(self) -> int:
        return self.alpha.size

    @property
    def p(self) -> int:
        return self.n_colors + int(self.mask.sum())

    def block_sizes(self) -> list[int]:
        return [1 + int(row.sum()) for row in self.mask]

    def color_block(self, c: int) -> np.ndarray:
        """Intercept and free interaction coefficients for response color ``c``."""
        return np.concatenate([[self.alpha[c]], self.beta[c, self.mask[c]]])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.color_block(c) for c in range(self.n_colors)])

    @classmethod
    def from_vector(cls, theta, mask) -> "Params":
        mask = np.asarray(mask, dtype=bool)
        k = mask.shape[0]
        theta = np.asarray(theta, dtype=float)
        if theta.size != k + int(mask.sum()):
            raise InvalidArgumentError(
                f"expected {k + int(mask.sum())} free parameters, got {theta.size}"
            )
        alpha = np.empty(k)
        beta = np.zeros((k, k))
        pos = 0
        for c in range(k):
            m = int(mask[c].sum())
            alpha[c] = theta[pos]
            beta[c, mask[c]] = theta[pos + 1 : pos + 1 + m]
            pos += 1 + m
        return cls(alpha, beta, mask)

    def labels(self, colors=None) -> list[str]:
        names = list(colors) if colors is not None else [str(c) for c in range(self.n_colors)]
        out = []
        for c in range(self.n_colors):
            out.append(f"alpha[{names[c]}]")
            out.extend(f"beta[{names[c]}|{names[d]}]" for d in range(self.n_colors) if self.mask[c, d])
        return out

    def with_mask(self, mask) -> "Params":
        return Params(self.alpha, self.beta, mask)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "mask": self.mask.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Params":
        try:
            return cls(d["alpha"], d["beta"], d.get("mask"))
        except KeyError as exc:
            raise InvalidArgumentError(f"params document is missing {exc}") from None


@dataclass(frozen=True)
class CountTensor:
    """Counts ``Y[t, c, i]`` for ``t = 0..T``; slice ``t = 0`` is the seed state."""

    counts: np.ndarray
    colors: tuple[str, ...] = None

    def __post_init__(self):
        counts = np.array(self.counts)
        if counts.ndim != 3:
            raise InvalidArgumentError(f"counts must be 3-d (t, color, tile), got {counts.ndim}-d")
        if counts.shape[0] < 1:
            raise InvalidArgumentError("counts need at least the t=0 slice")
        if np.issubdtype(counts.dtype, np.integer):
            counts = counts.astype(np.int64)
        else:
            # non-integer values are allowed for likelihood checks only
            counts = counts.astype(float)
        if np.any(counts < 0):
            raise InvalidArgumentError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        colors = self.colors
        if colors is None:
            colors = tuple(str(c) for c in range(counts.shape[1]))
        colors = tuple(str(c) for c in colors)
        if len(colors) != counts.shape[1]:
            raise InvalidArgumentError("one label per color is required")
        object.__setattr__(self, "colors", colors)

    @property
    def T(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def n_colors(self) -> int:
        return self.counts.shape[1]

    @property
    def n_tiles(self) -> int:
        return self.counts.shape[2]

    def window(self, t_start: int, t_stop: int) -> "CountTensor":
        """Slices ``t_start..t_stop`` inclusive, re-indexed so ``t_start`` is the new seed."""
        return CountTensor(self.counts[t_start : t_stop + 1], self.colors)


@dataclass(frozen=True)
class SufficientStats:
    """Neighborhood statistics; ``S[t - 1, c, i]`` holds the value used at time ``t``."""

    S: np.ndarray
    design: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        S.setflags(write=False)
        object.__setattr__(self, "S", S)
        T, k, n_tiles = S.shape
        # shared design: rows ordered (t, i), columns (1, S[.,0,.], ..., S[.,k-1,.])
        X = np.empty((T * n_tiles, 1 + k))
        X[:, 0] = 1.0
        X[:, 1:] = S.transpose(0, 2, 1).reshape(T * n_tiles, k)
        X.setflags(write=False)
        object.__setattr__(self, "design", X)

    @property
    def T(self) -> int:
        return self.S.shape[0]

    @property
    def n_colors(self) -> int:
        return self.S.shape[1]

    @property
    def n_tiles(self) -> int:
        return self.S.shape[2]

    def at(self, t: int) -> np.ndarray:
        """``(n_colors, n_tiles)`` statistics driving time ``t`` (1-based)."""
        if not 1 <= t <= self.T:
            raise InvalidArgumentError(f"t must lie in [1, {self.T}], got {t}")
        return self.S[t - 1]


def precompute_stats(y: CountTensor, geom: LatticeGeom) -> SufficientStats:
    if y.n_tiles != geom.n_tiles:
        raise InvalidArgumentError(
            f"count tensor has {y.n_tiles} tiles but geometry has {geom.n_tiles}"
        )
    return SufficientStats(neighbor_mean_log_all(y.counts[:-1], geom))


def _check_params(params: Params, n_colors: int):
    if params.n_colors != n_colors:
        raise InvalidArgumentError(
            f"params have {params.n_colors} colors but data have {n_colors}"
        )


def log_intensity_slice(params: Params, S_prev: np.ndarray) -> np.ndarray:
    """Log-intensities ``(n_colors, n_tiles)`` given the statistics of the previous slice."""
    return params.alpha[:, None] + params.beta @ S_prev


def log_intensity_all(params: Params, stats: SufficientStats) -> np.ndarray:
    """Log-intensities for every ``(t, c, i)``; row ``t - 1`` is time ``t``."""
    _check_params(params, stats.n_colors)
    return params.alpha[None, :, None] + np.einsum("cd,tdi->tci", params.beta, stats.S)


def log_intensity(params: Params, stats: SufficientStats, t: int, c: int, i: int) -> float:
    _check_params(params, stats.n_colors)
    if not 0 <= c < params.n_colors:
        raise InvalidArgumentError(f"color {c} out of range")
    if not 0 <= i < stats.n_tiles:
        raise InvalidArgumentError(f"tile {i} out of range")
    S = stats.at(t)
    return float(params.alpha[c] + params.beta[c] @ S[:, i])
