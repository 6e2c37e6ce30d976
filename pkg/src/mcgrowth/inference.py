"""Likelihood, score and Fisher-scoring maximum likelihood.

The log-likelihood (factorial term dropped) factorizes over response colors,
and every color shares the design row ``(1, S[t, 0, i], ..., S[t, k-1, i])``.
Each color is therefore an ordinary Poisson log-linear regression, fitted
independently by Fisher scoring. Under the canonical log link Fisher
scoring is exact Newton, so each iteration is one weighted least-squares
solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats as sps

from .errors import (
    ConvergenceError,
    InvalidArgumentError,
    RankDeficiencyError,
    SingularInformationError,
)
from .lattice import LatticeGeom
from .model import CountTensor, Params, SufficientStats, log_intensity_all, precompute_stats

log = logging.getLogger(__name__)

GRAD_TOL = 1e-8
REL_LOGLIK_TOL = 1e-12
MAX_ITER = 100
MAX_HALVINGS = 30


def _responses(y: CountTensor, stats: SufficientStats) -> np.ndarray:
    if y.n_tiles != stats.n_tiles or y.n_colors != stats.n_colors or y.T != stats.T:
        raise InvalidArgumentError("count tensor and statistics have inconsistent dimensions")
    return np.asarray(y.counts[1:], dtype=float)


def loglik(params: Params, y: CountTensor, stats: SufficientStats) -> float:
    """``sum_{t,c,i} Y v - exp(v)`` over ``t = 1..T``."""
    Y = _responses(y, stats)
    v = log_intensity_all(params, stats)
    return float(np.sum(Y * v - np.exp(v)))


def loglik_by_color(params: Params, y: CountTensor, stats: SufficientStats) -> np.ndarray:
    Y = _responses(y, stats)
    v = log_intensity_all(params, stats)
    return np.sum(Y * v - np.exp(v), axis=(0, 2))


def score(params: Params, y: CountTensor, stats: SufficientStats) -> np.ndarray:
    """Gradient of ``loglik / n_tiles`` over the free parameters (color-block order)."""
    Y = _responses(y, stats)
    v = log_intensity_all(params, stats)
    resid = Y - np.exp(v)  # (T, k, n_tiles)
    X = stats.design
    out = []
    for c in range(params.n_colors):
        cols = _design_columns(params.mask[c])
        out.append(X[:, cols].T @ resid[:, c, :].reshape(-1))
    return np.concatenate(out) / stats.n_tiles


def _design_columns(row_mask) -> np.ndarray:
    return np.concatenate([[0], 1 + np.flatnonzero(row_mask)])


def _column_names(cols) -> list[str]:
    return ["intercept" if j == 0 else f"S[{j - 1}]" for j in cols]


def _check_rank(X: np.ndarray, cols, color: int):
    if X.shape[0] < X.shape[1]:
        raise RankDeficiencyError(color, _column_names(cols))
    scale = np.sqrt(np.sum(X * X, axis=0))
    zero = scale == 0
    if zero.any():
        raise RankDeficiencyError(color, _column_names(np.asarray(cols)[zero]))
    _, R, piv = linalg.qr(X / scale, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    tol = max(X.shape) * np.finfo(float).eps * d[0] * 1e3
    bad = d <= tol
    if bad.any():
        raise RankDeficiencyError(color, _column_names(np.asarray(cols)[piv[bad]]))


@dataclass
class ColorFit:
    """Fisher-scoring result for a single response color."""

    coef: np.ndarray
    loglik: float
    iterations: int
    converged: bool
    grad_norm: float
    trace: list = field(default_factory=list)
    increments: list = field(default_factory=list)


def fit_color(
    stats: SufficientStats,
    y_color,
    row_mask,
    color: int = 0,
    *,
    gtol: float = GRAD_TOL,
    ftol: float = REL_LOGLIK_TOL,
    max_iter: int = MAX_ITER,
    max_halvings: int = MAX_HALVINGS,
    start=None,
) -> ColorFit:
    """Maximize the color-``color`` log-likelihood.

    Parameters
    ----------
    stats : SufficientStats
        Neighborhood statistics of the full data.
    y_color : array (T, n_tiles)
        Responses for this color at ``t = 1..T``.
    row_mask : bool array (n_colors,)
        Which interaction terms enter the intensity.
    start : array, optional
        Starting coefficients; defaults to ``log(1 + mean(y))`` and zeros.

    Step-halving guarantees that accepted iterates never decrease the
    log-likelihood. The increment is computed from the step itself rather than
    as a difference of two large sums, so it stays exact near the optimum.
    """
    n_tiles = stats.n_tiles
    cols = _design_columns(np.asarray(row_mask, dtype=bool))
    X = stats.design[:, cols]
    y = np.asarray(y_color, dtype=float).reshape(-1)
    _check_rank(X, cols, color)

    if start is None:
        b = np.zeros(cols.size)
        b[0] = np.log1p(y.mean())
    else:
        b = np.array(start, dtype=float)
    eta = X @ b
    mu = np.exp(eta)
    ll = float(y @ eta - mu.sum())
    trace, incs = [ll], []
    converged = False
    it = 0
    while True:
        grad = X.T @ (y - mu)
        gnorm = float(np.max(np.abs(grad))) / n_tiles
        if gnorm <= gtol:
            converged = True
            break
        if it >= max_iter:
            break
        info = X.T @ (X * mu[:, None])
        try:
            step = linalg.cho_solve(linalg.cho_factor(info), grad)
        except linalg.LinAlgError:
            raise SingularInformationError(
                f"information matrix for color {color} is not positive definite"
            ) from None
        it += 1
        d_eta = X @ step
        s = 1.0
        accepted = False
        for _ in range(max_halvings + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                inc = float(s * (y @ d_eta) - mu @ np.expm1(s * d_eta))
            if np.isfinite(inc) and inc >= 0:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        b = b + s * step
        eta = X @ b
        mu = np.exp(eta)
        ll_new = float(y @ eta - mu.sum())
        incs.append(inc)
        trace.append(ll_new)
        if abs(inc) <= ftol * abs(ll):
            ll = ll_new
            grad = X.T @ (y - mu)
            gnorm = float(np.max(np.abs(grad))) / n_tiles
            converged = gnorm <= gtol
            break
        ll = ll_new

    res = ColorFit(b, ll, it, converged, gnorm, trace, incs)
    if not converged:
        raise ConvergenceError(
            f"Fisher scoring for color {color} stopped after {it} iterations "
            f"with score sup-norm {gnorm:.3g}",
            partial=res,
        )
    return res


@dataclass
class FitResult:
    params_hat: Params
    loglik: float
    se: np.ndarray
    cov: np.ndarray
    iterations: int
    converged: bool
    grad_norm: float
    aic: float
    bic: float
    n_tiles: int
    T: int
    colors: tuple = None
    color_fits: list = field(default_factory=list, repr=False)

    @property
    def p(self) -> int:
        return self.params_hat.p

    @property
    def mask(self) -> np.ndarray:
        return self.params_hat.mask

    @property
    def theta(self) -> np.ndarray:
        return self.params_hat.to_vector()

    def labels(self) -> list[str]:
        return self.params_hat.labels(self.colors)

    def to_dict(self) -> dict:
        return {
            "params": self.params_hat.to_dict(),
            "theta": self.theta.tolist(),
            "labels": self.labels(),
            "se": self.se.tolist(),
            "cov": self.cov.tolist(),
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "p": self.p,
            "n_tiles": self.n_tiles,
            "T": self.T,
            "colors": list(self.colors) if self.colors else None,
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        params = Params.from_dict(d["params"])
        return cls(
            params_hat=params,
            loglik=float(d["loglik"]),
            se=np.asarray(d["se"], dtype=float),
            cov=np.asarray(d["cov"], dtype=float),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", True)),
            grad_norm=float(d.get("grad_norm", 0.0)),
            aic=float(d["aic"]),
            bic=float(d["bic"]),
            n_tiles=int(d["n_tiles"]),
            T=int(d["T"]),
            colors=tuple(d["colors"]) if d.get("colors") else None,
        )


def information_criteria(ll: float, p: int, n_obs: int) -> tuple[float, float]:
    """``(AIC, BIC)`` with BIC sample size ``n_obs = n_tiles * T``."""
    return -2.0 * ll + 2.0 * p, -2.0 * ll + p * np.log(n_obs)


def fit(y: CountTensor, geom: LatticeGeom, mask=None, *, stats: SufficientStats | None = None, **kw) -> FitResult:
    """Maximum likelihood fit of the full or masked model.

    Keyword arguments (``gtol``, ``ftol``, ``max_iter``, ``max_halvings``)
    are forwarded to :func:`fit_color`.
    """
    k = y.n_colors
    if y.T < 1:
        raise InvalidArgumentError("at least one transition (T >= 1) is required")
    mask = np.ones((k, k), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if mask.shape != (k, k):
        raise InvalidArgumentError(f"mask must be {k}x{k}, got {mask.shape}")
    if stats is None:
        stats = precompute_stats(y, geom)
    Y = _responses(y, stats)

    fits = []
    for c in range(k):
        try:
            fits.append(fit_color(stats, Y[:, c, :], mask[c], c, **kw))
        except ConvergenceError as exc:
            raise ConvergenceError(str(exc), partial={"color": c, "done": fits, "last": exc.partial}) from None
    theta = np.concatenate([f.coef for f in fits])
    params_hat = Params.from_vector(theta, mask)
    ll = float(sum(f.loglik for f in fits))
    cov = sandwich_cov(params_hat, stats)
    aic, bic = information_criteria(ll, params_hat.p, y.n_tiles * y.T)
    return FitResult(
        params_hat=params_hat,
        loglik=ll,
        se=np.sqrt(np.diag(cov)),
        cov=cov,
        iterations=max(f.iterations for f in fits),
        converged=all(f.converged for f in fits),
        grad_norm=max(f.grad_norm for f in fits),
        aic=aic,
        bic=bic,
        n_tiles=y.n_tiles,
        T=y.T,
        colors=y.colors,
        color_fits=fits,
    )


def information_blocks(params: Params, stats: SufficientStats) -> list[np.ndarray]:
    """Per-color observed information ``sum exp(v) g g'`` with ``g`` the design row."""
    X = stats.design
    blocks = []
    for c in range(params.n_colors):
        cols = _design_columns(params.mask[c])
        Xc = X[:, cols]
        mu = np.exp(Xc @ params.color_block(c))
        blocks.append(Xc.T @ (Xc * mu[:, None]))
    return blocks


def sandwich_cov(params_hat: Params, stats: SufficientStats) -> np.ndarray:
    """Block-diagonal inverse of the empirical information, masked terms excluded."""
    if params_hat.n_colors != stats.n_colors:
        raise InvalidArgumentError("params and statistics disagree on the number of colors")
    inv = []
    for c, H in enumerate(information_blocks(params_hat, stats)):
        try:
            cf = linalg.cho_factor(H)
        except linalg.LinAlgError:
            raise SingularInformationError(f"information block for color {c} is singular") from None
        Hinv = linalg.cho_solve(cf, np.eye(H.shape[0]))
        inv.append(0.5 * (Hinv + Hinv.T))
    return linalg.block_diag(*inv)


def confidence_intervals(fit: FitResult, level: float = 0.95, se=None) -> np.ndarray:
    """Normal intervals ``theta +- z * se`` as a ``(p, 2)`` array.

    ``se`` overrides the fit's standard errors (e.g. bootstrap ones).
    """
    if not 0.0 < level < 1.0:
        raise InvalidArgumentError(f"level must lie in (0, 1), got {level}")
    if not fit.converged:
        raise InvalidArgumentError("confidence intervals need a converged fit")
    z = sps.norm.ppf(0.5 + level / 2.0)
    se = fit.se if se is None else np.asarray(se, dtype=float)
    theta = fit.theta
    return np.column_stack([theta - z * se, theta + z * se])
