"""Goodness-of-fit replication, one-step-ahead forecasting and QQ bands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExplosiveProcessError, InvalidArgumentError
from .inference import FitResult, fit
from .lattice import LatticeGeom, neighbor_mean_log_all
from .model import CountTensor, log_intensity_all, log_intensity_slice, precompute_stats
from .simulate import MAX_LOG_INTENSITY, make_rng, simulate_onestep

DEFAULT_WINDOW = 5


def replicate_fit(y: CountTensor, geom: LatticeGeom, fit_result: FitResult, rng_seed: int = 0) -> CountTensor:
    """Replicate tensor drawn slice by slice conditional on the *observed* previous slice."""
    stats = precompute_stats(y, geom)
    v = log_intensity_all(fit_result.params_hat, stats)
    rng = make_rng(rng_seed)
    out = np.empty_like(y.counts, dtype=np.int64)
    out[0] = y.counts[0]
    for t in range(1, y.T + 1):
        vt = v[t - 1]
        if np.any(vt > MAX_LOG_INTENSITY):
            c, i = np.argwhere(vt > MAX_LOG_INTENSITY)[0]
            raise ExplosiveProcessError(t, int(c), int(i), float(vt[c, i]))
        out[t] = rng.poisson(np.exp(vt))
    return CountTensor(out, y.colors)


@dataclass
class Forecast:
    t_pred: int
    window: int
    intensity: np.ndarray  # (n_colors, n_tiles)
    sample: np.ndarray  # (n_colors, n_tiles)
    fit: FitResult
    observed: np.ndarray | None = None


def onestep_forecast(
    y: CountTensor,
    geom: LatticeGeom,
    t_pred: int,
    window: int = DEFAULT_WINDOW,
    rng_seed: int = 0,
) -> Forecast:
    """Fit on responses at ``t_pred - window .. t_pred - 1`` and forecast ``t_pred``."""
    if window < 1:
        raise InvalidArgumentError(f"window must be positive, got {window}")
    if t_pred - window < 1:
        raise InvalidArgumentError(f"t_pred - window must be >= 1 (t_pred={t_pred}, window={window})")
    if t_pred > y.T + 1:
        raise InvalidArgumentError(f"t_pred={t_pred} is beyond one step after the last slice T={y.T}")
    n_cols = 1 + y.n_colors
    if window * y.n_tiles < n_cols:
        raise InvalidArgumentError(
            f"{window * y.n_tiles} observations per color cannot identify {n_cols} parameters"
        )
    sub = y.window(t_pred - window - 1, t_pred - 1)
    res = fit(sub, geom)
    prev = y.counts[t_pred - 1]
    rng = make_rng(rng_seed, t_pred)
    sample = simulate_onestep(res.params_hat, geom, prev, rng, t=t_pred)
    lam = np.exp(log_intensity_slice(res.params_hat, neighbor_mean_log_all(prev, geom)))
    observed = y.counts[t_pred] if t_pred <= y.T else None
    return Forecast(t_pred, window, lam, sample, res, observed)


def _ecdf(sorted_x: np.ndarray, q) -> np.ndarray:
    return np.searchsorted(sorted_x, q, side="right") / sorted_x.size


def _quantile_type1(sorted_x: np.ndarray, p) -> np.ndarray:
    """Left-continuous inverse of the empirical CDF, ``inf{x : F(x) >= p}``."""
    n = sorted_x.size
    p = np.asarray(p, dtype=float)
    # the 1e-9 guard stops k/n * n from rounding up past k
    idx = np.ceil(n * p - 1e-9).astype(np.int64) - 1
    return sorted_x[np.clip(idx, 0, n - 1)]


@dataclass
class QQBand:
    probs: np.ndarray
    observed_q: np.ndarray
    predicted_q: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    covered: bool
    offset: float


def qq_band(observed, predicted, offset: float = 0.95, probs=None) -> QQBand:
    """Quantiles of predicted vs observed counts with a nonparametric band.

    At each probability ``p`` (by default ``F0(y)`` for every distinct observed
    value ``y``) the band runs from ``F1^-1(p - offset)`` to
    ``F1^-1(p + offset)``, the shifted probabilities clamped to ``[0, 1]``.
    ``F0`` and ``F1`` are the empirical CDFs of observations and predictions.
    ``covered`` says whether the identity line stays inside the band.
    """
    obs = np.sort(np.asarray(observed, dtype=float).ravel())
    pred = np.sort(np.asarray(predicted, dtype=float).ravel())
    if obs.size == 0 or pred.size == 0:
        raise InvalidArgumentError("observed and predicted samples must be nonempty")
    if not 0.0 <= offset < 1.0:
        raise InvalidArgumentError(f"offset must lie in [0, 1), got {offset}")
    if probs is None:
        obs_q = np.unique(obs)
        probs = _ecdf(obs, obs_q)
    else:
        probs = np.asarray(probs, dtype=float)
        obs_q = _quantile_type1(obs, probs)
    pred_q = _quantile_type1(pred, probs)
    lo = _quantile_type1(pred, np.clip(probs - offset, 0.0, 1.0))
    hi = _quantile_type1(pred, np.clip(probs + offset, 0.0, 1.0))
    covered = bool(np.all((lo <= obs_q) & (obs_q <= hi)))
    return QQBand(probs, obs_q, pred_q, lo, hi, covered, offset)


def forecast_qq(
    y: CountTensor,
    geom: LatticeGeom,
    t_list,
    window: int = DEFAULT_WINDOW,
    offset: float = 0.95,
    rng_seed: int = 0,
) -> list[tuple[int, int, QQBand]]:
    """QQ bands of one-step-ahead samples against observations, per time and color."""
    out = []
    for t in t_list:
        fc = onestep_forecast(y, geom, t, window, rng_seed)
        if fc.observed is None:
            raise InvalidArgumentError(f"no observations at t={t} to compare with")
        for c in range(y.n_colors):
            out.append((t, c, qq_band(fc.observed[c], fc.sample[c], offset)))
    return out
