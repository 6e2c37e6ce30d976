"""Conditional spatial autoregressive Poisson model for multicolor cell counts on a lattice."""

__version__ = "0.1.0"

from .bootstrap import BootstrapResult, parametric_bootstrap
from .errors import (
    ConvergenceError,
    ExplosiveProcessError,
    InvalidArgumentError,
    MCGError,
    ParseError,
    RankDeficiencyError,
    SingularInformationError,
)
from .experiments import MCDesign, MonteCarloReport, preset_params, run_table1, run_table2, run_table3
from .inference import FitResult, confidence_intervals, fit, loglik, sandwich_cov, score
from .lattice import LatticeGeom, build_grid, neighbor_mean_log
from .model import CountTensor, Params, SufficientStats, log_intensity, precompute_stats
from .predict import QQBand, onestep_forecast, qq_band, replicate_fit
from .selection import SelectionResult, select
from .simulate import SimConfig, simulate, simulate_onestep
