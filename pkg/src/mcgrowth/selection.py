"""Best-subset AIC/BIC selection of interaction terms.

Log-likelihood, parameter count and hence AIC/BIC are sums over response
colors, so the joint best mask is found by searching each row of the
interaction matrix on its own: ``n_colors * 2**n_colors`` fits instead of
``2**(n_colors**2)``. Intercepts are always kept.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidArgumentError, MCGError
from .inference import FitResult, _responses, fit, fit_color
from .lattice import LatticeGeom
from .model import CountTensor, precompute_stats

log = logging.getLogger(__name__)

TIE_TOL = 1e-9
MAX_COLORS = 20


class Criterion(str, Enum):
    AIC = "aic"
    BIC = "bic"

    @classmethod
    def parse(cls, value) -> "Criterion":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgumentError(f"unknown criterion {value!r}; use 'aic' or 'bic'") from None

    def penalty(self, n_obs: int) -> float:
        return 2.0 if self is Criterion.AIC else float(np.log(n_obs))


@dataclass
class SelectionResult:
    best_mask: np.ndarray
    criterion: Criterion
    best_value: float
    per_color_tables: list = field(default_factory=list)
    ties: int = 0
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "best_mask": self.best_mask.tolist(),
            "criterion": self.criterion.value,
            "best_value": self.best_value,
            "ties": self.ties,
            "skipped": [list(map(int, s[1])) + [s[0]] for s in self.skipped],
            "per_color_tables": [
                [{"terms": list(map(bool, m)), "value": v} for m, v in table]
                for table in self.per_color_tables
            ],
        }


def _pick(candidates):
    """Criterion minimizer; near-ties go to the smaller, then lexicographically smaller mask."""
    best = min(v for _, v in candidates)
    tied = [(m, v) for m, v in candidates if v - best < TIE_TOL]
    tied.sort(key=lambda mv: (sum(mv[0]), mv[0]))
    return tied[0], len(tied) - 1


def select(y: CountTensor, geom: LatticeGeom, criterion="bic", **fit_kw) -> tuple[SelectionResult, FitResult]:
    crit = Criterion.parse(criterion)
    k = y.n_colors
    if k > MAX_COLORS:
        raise InvalidArgumentError(f"exhaustive search supports at most {MAX_COLORS} colors, got {k}")
    stats = precompute_stats(y, geom)
    Y = _responses(y, stats)
    pen = crit.penalty(y.n_tiles * y.T)
    full = tuple([True] * k)

    best_mask = np.zeros((k, k), dtype=bool)
    tables, skipped = [], []
    ties = 0
    for c in range(k):
        table = []
        for row in itertools.product((False, True), repeat=k):
            try:
                cf = fit_color(stats, Y[:, c, :], np.array(row), c, **fit_kw)
            except MCGError as exc:
                if row == full:
                    raise
                log.warning("skipping color %d candidate %s: %s", c, row, exc)
                skipped.append((c, row))
                continue
            table.append((row, -2.0 * cf.loglik + pen * (1 + sum(row))))
        (row, _), n_tied = _pick(table)
        ties += n_tied
        best_mask[c] = row
        tables.append(table)

    result = fit(y, geom, best_mask, stats=stats, **fit_kw)
    value = result.aic if crit is Criterion.AIC else result.bic
    return SelectionResult(best_mask, crit, value, tables, ties, skipped), result
