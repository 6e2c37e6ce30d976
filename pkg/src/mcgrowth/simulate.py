"""Forward simulation of the conditional Poisson lattice model.

Poisson variates are drawn one time slice at a time, each slice in
ascending ``(color, tile)`` order, from a PCG64 generator. Given the same
seed the output is identical on every machine and for any worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExplosiveProcessError, InvalidArgumentError
from .lattice import LatticeGeom, neighbor_mean_log_all
from .model import CountTensor, Params, log_intensity_slice

MAX_LOG_INTENSITY = 700.0

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``, optionally split by stream indices (e.g. replicate number)."""
    entropy = [int(seed) & _SEED_MASK] + [int(s) & _SEED_MASK for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class SimConfig:
    params: Params
    geom: LatticeGeom
    T: int
    seed_count: int = 1
    rng_seed: int = 0
    initial: np.ndarray | None = None  # optional (n_colors, n_tiles) t=0 slice

    def __post_init__(self):
        if self.T < 1:
            raise InvalidArgumentError(f"T must be >= 1, got {self.T}")
        if self.seed_count < 0:
            raise InvalidArgumentError("seed_count must be nonnegative")
        if self.initial is not None:
            init = np.asarray(self.initial)
            if init.shape != (self.params.n_colors, self.geom.n_tiles):
                raise InvalidArgumentError(
                    f"initial slice must have shape {(self.params.n_colors, self.geom.n_tiles)}"
                )


def _draw(params: Params, S_prev: np.ndarray, rng: np.random.Generator, t: int) -> np.ndarray:
    v = log_intensity_slice(params, S_prev)
    bad = v > MAX_LOG_INTENSITY
    if bad.any():
        c, i = np.argwhere(bad)[0]
        raise ExplosiveProcessError(t, int(c), int(i), float(v[c, i]))
    return rng.poisson(np.exp(v))


def simulate_onestep(params: Params, geom: LatticeGeom, counts_prev, rng: np.random.Generator, t: int | None = None) -> np.ndarray:
    """One conditional draw ``(n_colors, n_tiles)`` given the previous slice."""
    counts_prev = np.asarray(counts_prev)
    if counts_prev.shape != (params.n_colors, geom.n_tiles):
        raise InvalidArgumentError(
            f"previous slice must have shape {(params.n_colors, geom.n_tiles)}, got {counts_prev.shape}"
        )
    return _draw(params, neighbor_mean_log_all(counts_prev, geom), rng, t)


def simulate_from(params: Params, geom: LatticeGeom, initial, T: int, rng: np.random.Generator, colors=None) -> CountTensor:
    """Trajectory of ``T`` steps started from an explicit t=0 slice."""
    k, n_tiles = params.n_colors, geom.n_tiles
    out = np.empty((T + 1, k, n_tiles), dtype=np.int64)
    out[0] = initial
    for t in range(1, T + 1):
        out[t] = simulate_onestep(params, geom, out[t - 1], rng, t=t)
    return CountTensor(out, colors)


def simulate(config: SimConfig, colors=None) -> CountTensor:
    params, geom = config.params, config.geom
    if config.initial is not None:
        initial = np.asarray(config.initial, dtype=np.int64)
    else:
        initial = np.full((params.n_colors, geom.n_tiles), config.seed_count, dtype=np.int64)
    return simulate_from(params, geom, initial, config.T, make_rng(config.rng_seed), colors)
