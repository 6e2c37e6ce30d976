"""Parametric bootstrap for the fitted lattice model."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, MCGError
from .inference import FitResult, fit
from .lattice import LatticeGeom
from .model import CountTensor, Params
from .parallel import pmap
from .simulate import make_rng, simulate_from

log = logging.getLogger(__name__)

MAX_FAILED_FRACTION = 0.10


@dataclass
class BootstrapResult:
    B: int
    estimates: np.ndarray
    cov_boot: np.ndarray
    se_boot: np.ndarray
    mean: np.ndarray
    failed: int = 0
    rng_seed: int | None = None
    labels: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "failed": self.failed,
            "rng_seed": self.rng_seed,
            "labels": self.labels,
            "mean": self.mean.tolist(),
            "se_boot": self.se_boot.tolist(),
            "cov_boot": self.cov_boot.tolist(),
            "estimates": self.estimates.tolist(),
        }


def _one_replicate(args):
    params, geom, y0, T, seed, b = args
    for attempt in range(2):
        rng = make_rng(seed, b, attempt)
        try:
            ystar = simulate_from(params, geom, y0, T, rng)
            return fit(ystar, geom, params.mask).theta
        except MCGError as exc:
            log.info("bootstrap replicate %d attempt %d failed: %s", b, attempt, exc)
    return None


def parametric_bootstrap(
    fit_result: FitResult,
    y0,
    geom: LatticeGeom,
    B: int,
    rng_seed: int = 0,
    *,
    T: int | None = None,
    workers: int | None = None,
) -> BootstrapResult:
    """Resimulate ``B`` trajectories from the fitted parameters and refit each.

    Trajectories start from the observed ``t = 0`` slice ``y0`` (a
    :class:`CountTensor` is accepted, its first slice is used) and run for
    ``T`` steps, the fit's own ``T`` by default. Replicate ``b`` draws from a
    generator keyed on ``(rng_seed, b)``. A failed replicate is retried once
    on a fresh stream; if more than 10% of replicates still fail the call
    raises.
    """
    if B < 2:
        raise InvalidArgumentError(f"B must be >= 2, got {B}")
    if not fit_result.converged:
        raise InvalidArgumentError("bootstrap needs a converged fit")
    if isinstance(y0, CountTensor):
        y0 = y0.counts[0]
    params: Params = fit_result.params_hat
    y0 = np.asarray(y0, dtype=np.int64)
    if y0.shape != (params.n_colors, geom.n_tiles):
        raise InvalidArgumentError(f"seed slice must have shape {(params.n_colors, geom.n_tiles)}")
    T = fit_result.T if T is None else T

    jobs = [(params, geom, y0, T, rng_seed, b) for b in range(B)]
    out = pmap(_one_replicate, jobs, workers)
    ok = [th for th in out if th is not None]
    failed = B - len(ok)
    if failed > MAX_FAILED_FRACTION * B or len(ok) < 2:
        raise MCGError(f"{failed} of {B} bootstrap replicates failed")
    est = np.vstack(ok)
    mean = est.mean(axis=0)
    cov = np.cov(est, rowvar=False, ddof=1).reshape(est.shape[1], est.shape[1])
    return BootstrapResult(
        B=B,
        estimates=est,
        cov_boot=cov,
        se_boot=np.sqrt(np.diag(cov)),
        mean=mean,
        failed=failed,
        rng_seed=rng_seed,
        labels=fit_result.labels(),
    )
