"""Monte Carlo harness for estimator bias/variance, CI coverage and selection errors.

Three preset interaction matrices are provided (all with intercepts -0.1):
equal-size effects (model 1), decreasing effects (model 2) and a sparse
version of model 1 (model 3). Each replicate simulates a trajectory on an
``n x n`` grid from equal seed counts and refits it.

Selection error rates count interaction entries only:

* Type A: true nonzero entries left out, as a percentage of
  ``(#nonzero entries) * (#replicates)``;
* Type B: true zero entries selected, as a percentage of
  ``(#zero entries) * (#replicates)``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats as sps

from .bootstrap import parametric_bootstrap
from .errors import InvalidArgumentError, MCGError
from .inference import fit
from .lattice import build_grid
from .model import Params
from .parallel import pmap
from .selection import Criterion, select
from .simulate import make_rng, simulate_from

log = logging.getLogger(__name__)

PRESET_BETAS = {
    1: [[0.7, -0.7, 0.7], [0.7, 0.7, -0.7], [-0.7, 0.7, 0.7]],
    2: [[0.05, -0.15, 0.25], [0.35, 0.45, -0.55], [-0.65, 0.75, 0.85]],
    3: [[0.7, -0.7, 0.7], [0.0, 0.7, 0.0], [0.0, 0.0, 0.7]],
}
PRESET_ALPHA = -0.1
DEFAULT_SEED_COUNT = 10
MAX_FAILED_FRACTION = 0.05


def preset_params(model_id: int) -> Params:
    if model_id not in PRESET_BETAS:
        raise InvalidArgumentError(f"unknown model {model_id}; presets are 1, 2, 3")
    beta = np.array(PRESET_BETAS[model_id])
    return Params(np.full(3, PRESET_ALPHA), beta)


@dataclass
class MCDesign:
    model: int | Params = 1
    n: int = 25
    T: int = 10
    n_replicates: int = 200
    levels: tuple = (0.90, 0.95, 0.99)
    criteria: tuple = ("aic", "bic")
    rng_seed: int = 1
    seed_count: int = DEFAULT_SEED_COUNT
    n_boot: int = 50
    workers: int | None = None

    def __post_init__(self):
        if self.n_replicates < 2:
            raise InvalidArgumentError("n_replicates must be >= 2")

    @property
    def params(self) -> Params:
        return self.model if isinstance(self.model, Params) else preset_params(self.model)

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("model", "workers")}
        d["levels"] = list(self.levels)
        d["criteria"] = list(self.criteria)
        if isinstance(self.model, Params):
            d["model"] = "custom"
            d["params"] = self.model.to_dict()
        else:
            d["model"] = self.model
        return d


@dataclass
class MonteCarloReport:
    """Summaries of a Monte Carlo run.

    ``bias_sq`` is reported in units of 1e-6 and ``variance`` in units of
    1e-4; ``coverage`` maps ``"<level>/<method>"`` to a proportion, and
    ``type_a``/``type_b`` map criterion names to percentages. ``sim_se`` holds
    the simulation standard error of every summary under the same key.
    """

    table: int
    design: dict
    n_ok: int
    failed: int
    labels: list = field(default_factory=list)
    bias_sq: dict = field(default_factory=dict)
    variance: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    type_a: dict = field(default_factory=dict)
    type_b: dict = field(default_factory=dict)
    sim_se: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "table": self.table,
            "design": self.design,
            "units": {"bias_sq": 1e-6, "variance": 1e-4, "type_a": "percent", "type_b": "percent"},
            "n_ok": self.n_ok,
            "failed": self.failed,
            "labels": self.labels,
            "bias_sq": self.bias_sq,
            "variance": self.variance,
            "coverage": self.coverage,
            "type_a": self.type_a,
            "type_b": self.type_b,
            "sim_se": self.sim_se,
        }


def _simulate(design_params, n, T, seed_count, seed, r):
    geom = build_grid(n)
    init = np.full((design_params.n_colors, geom.n_tiles), seed_count, dtype=np.int64)
    return geom, simulate_from(design_params, geom, init, T, make_rng(seed, r))


def _replicate(job):
    task, params, n, T, seed_count, seed, r, extra = job
    try:
        geom, y = _simulate(params, n, T, seed_count, seed, r)
        if task == "table3":
            return {c: select(y, geom, c)[0].best_mask for c in extra}
        res = fit(y, geom, params.mask)
        out = {"theta": res.theta, "se": res.se}
        if task == "table2" and extra:
            boot_seed = int(np.random.SeedSequence([seed, r]).generate_state(1)[0])
            boot = parametric_bootstrap(res, y.counts[0], geom, extra, boot_seed, workers=1)
            out["se_boot"] = boot.se_boot
        return out
    except MCGError as exc:
        log.info("replicate %d failed: %s", r, exc)
        return None


def _run(task, design: MCDesign, extra):
    params = design.params
    jobs = [
        (task, params, design.n, design.T, design.seed_count, design.rng_seed, r, extra)
        for r in range(design.n_replicates)
    ]
    out = pmap(_replicate, jobs, design.workers)
    ok = [o for o in out if o is not None]
    failed = len(out) - len(ok)
    if failed > MAX_FAILED_FRACTION * len(out):
        raise MCGError(f"{failed} of {len(out)} Monte Carlo replicates failed")
    return params, ok, failed


def _bias_variance(theta: np.ndarray, truth: np.ndarray):
    R, p = theta.shape
    mean = theta.mean(axis=0)
    dev = mean - truth
    cov_mean = np.cov(theta, rowvar=False, ddof=1) / R
    var_j = theta.var(axis=0, ddof=1)
    # delta method: d(bias^2)/d(mean) = 2 * (mean - truth)
    bias_se_j = 2.0 * np.abs(dev) * np.sqrt(np.diag(cov_mean))
    grad = 2.0 * dev / p
    bias_se_avg = float(np.sqrt(max(grad @ cov_mean @ grad, 0.0)))
    sq = (theta - mean) ** 2
    var_se_j = sq.std(axis=0, ddof=1) / np.sqrt(R)
    var_se_avg = float(sq.mean(axis=1).std(ddof=1) / np.sqrt(R))
    return {
        "bias_sq": dev**2,
        "bias_sq_avg": float(np.mean(dev**2)),
        "bias_se": bias_se_j,
        "bias_se_avg": bias_se_avg,
        "var": var_j,
        "var_avg": float(var_j.mean()),
        "var_se": var_se_j,
        "var_se_avg": var_se_avg,
    }


def run_table1(design: MCDesign) -> MonteCarloReport:
    """Monte Carlo squared bias and variance of the MLE."""
    params, ok, failed = _run("table1", design, None)
    theta = np.vstack([o["theta"] for o in ok])
    bv = _bias_variance(theta, params.to_vector())
    rep = MonteCarloReport(1, design.describe(), len(ok), failed, params.labels())
    rep.bias_sq = {"per_parameter": (bv["bias_sq"] * 1e6).tolist(), "average": bv["bias_sq_avg"] * 1e6}
    rep.variance = {"per_parameter": (bv["var"] * 1e4).tolist(), "average": bv["var_avg"] * 1e4}
    rep.sim_se = {
        "bias_sq": {"per_parameter": (bv["bias_se"] * 1e6).tolist(), "average": bv["bias_se_avg"] * 1e6},
        "variance": {"per_parameter": (bv["var_se"] * 1e4).tolist(), "average": bv["var_se_avg"] * 1e4},
    }
    return rep


def _coverage(theta, se, truth, level):
    z = sps.norm.ppf(0.5 + level / 2.0)
    hit = np.abs(theta - truth) <= z * se
    # replicate-level SE: parameters within one replicate are correlated
    per_rep = hit.mean(axis=1)
    return float(hit.mean()), float(per_rep.std(ddof=1) / np.sqrt(per_rep.size))


def run_table2(design: MCDesign) -> MonteCarloReport:
    """Coverage of normal CIs with sandwich and (if ``n_boot > 0``) bootstrap SEs."""
    params, ok, failed = _run("table2", design, design.n_boot)
    truth = params.to_vector()
    theta = np.vstack([o["theta"] for o in ok])
    ses = {"sandwich": np.vstack([o["se"] for o in ok])}
    if design.n_boot:
        ses["bootstrap"] = np.vstack([o["se_boot"] for o in ok])
    rep = MonteCarloReport(2, design.describe(), len(ok), failed, params.labels())
    for level in design.levels:
        for method, se in ses.items():
            key = f"{level:g}/{method}"
            rep.coverage[key], rep.sim_se[key] = _coverage(theta, se, truth, level)
    return rep


def selection_errors(masks, true_mask) -> tuple[float | None, float | None, float | None, float | None]:
    """Type A and Type B percentages (and their simulation SEs) for a list of masks."""
    true_mask = np.asarray(true_mask, dtype=bool)
    sel = np.asarray(masks, dtype=bool).reshape(-1, *true_mask.shape)
    R = sel.shape[0]
    n_nz, n_z = int(true_mask.sum()), int((~true_mask).sum())

    def pct(count, denom):
        if denom == 0:
            return None, None
        q = count / denom
        return 100.0 * q, 100.0 * float(np.sqrt(q * (1 - q) / denom))

    a, a_se = pct(int((~sel & true_mask).sum()), n_nz * R)
    b, b_se = pct(int((sel & ~true_mask).sum()), n_z * R)
    return a, b, a_se, b_se


def run_table3(design: MCDesign) -> MonteCarloReport:
    """Type A/B selection errors of best-subset AIC and BIC."""
    crits = [Criterion.parse(c).value for c in design.criteria]
    params, ok, failed = _run("table3", design, crits)
    true_mask = params.beta != 0
    rep = MonteCarloReport(3, design.describe(), len(ok), failed, params.labels())
    for c in crits:
        a, b, a_se, b_se = selection_errors([o[c] for o in ok], true_mask)
        rep.type_a[c], rep.type_b[c] = a, b
        rep.sim_se[f"type_a/{c}"], rep.sim_se[f"type_b/{c}"] = a_se, b_se
    return rep


RUNNERS = {1: run_table1, 2: run_table2, 3: run_table3}
