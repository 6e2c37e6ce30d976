import math

import numpy as np
import pytest

from mcgrowth import (
    ConvergenceError,
    CountTensor,
    InvalidArgumentError,
    Params,
    RankDeficiencyError,
    SimConfig,
    build_grid,
    confidence_intervals,
    fit,
    loglik,
    precompute_stats,
    sandwich_cov,
    score,
    simulate,
)
from mcgrowth.experiments import preset_params
from mcgrowth.inference import FitResult, fit_color, information_criteria

from conftest import random_instance, zeros_tensor
from oracles import brute_loglik, central_diff, generic_mle, numeric_hessian


def test_loglik_all_zero():
    y = zeros_tensor(3, 2, 9)
    p = Params(np.zeros(2), np.zeros((2, 2)))
    assert loglik(p, y, precompute_stats(y, build_grid(3))) == -9 * 3 * 2


def test_loglik_single_term():
    y = CountTensor(np.array([[[0]], [[2]]]))
    p = Params([0.0], [[0.0]])
    assert loglik(p, y, precompute_stats(y, build_grid(1))) == -1.0


def test_loglik_matches_brute_force(rng):
    for _ in range(5):
        params, y = random_instance(rng)
        got = loglik(params, y, precompute_stats(y, build_grid(4)))
        want = brute_loglik(params.alpha, params.beta, y.counts, 4)
        assert got == pytest.approx(want, rel=1e-12)


def test_score_matches_finite_differences(rng):
    for _ in range(10):
        _, y = random_instance(rng)
        st_ = precompute_stats(y, build_grid(4))
        theta = rng.normal(0, 0.3, 6)
        mask = np.ones((2, 2), bool)

        def f(th):
            return loglik(Params.from_vector(th, mask), y, st_) / y.n_tiles

        fd = central_diff(f, theta)
        an = score(Params.from_vector(theta, mask), y, st_)
        assert np.max(np.abs(an - fd)) / np.max(np.abs(fd)) < 1e-6


def test_score_masked_coordinates(rng):
    _, y = random_instance(rng, k=3)
    st_ = precompute_stats(y, build_grid(4))
    mask = np.array([[1, 0, 1], [0, 0, 0], [1, 1, 1]], bool)
    p = Params(rng.normal(0, 0.2, 3), rng.normal(0, 0.2, (3, 3)), mask)
    full = score(Params(p.alpha, p.beta), y, st_)
    keep = np.concatenate([[True], mask[0], [True], mask[1], [True], mask[2]])
    np.testing.assert_allclose(score(p, y, st_), full[keep], rtol=1e-13)


def test_score_zero_when_counts_equal_intensity(rng):
    g = build_grid(3)
    p = Params([0.2, -0.1], [[0.3, -0.2], [0.1, 0.4]])
    counts = np.empty((4, 2, 9))
    counts[0] = rng.poisson(3, (2, 9))
    from mcgrowth.lattice import neighbor_mean_log_all
    from mcgrowth.model import log_intensity_slice

    for t in range(1, 4):
        counts[t] = np.exp(log_intensity_slice(p, neighbor_mean_log_all(counts[t - 1], g)))
    y = CountTensor(counts)
    assert np.max(np.abs(score(p, y, precompute_stats(y, g)))) < 1e-13


def test_score_vanishes_at_mle(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    assert res.converged
    assert np.max(np.abs(score(res.params_hat, y, precompute_stats(y, geom)))) <= 1e-8
    assert res.grad_norm <= 1e-8


def test_intercept_only_truth_recovered():
    p = Params([0.3, -0.5], np.zeros((2, 2)))
    g = build_grid(30)
    y = simulate(SimConfig(p, g, 5, 1, 21))
    res = fit(y, g)
    means = y.counts[1:].mean(axis=(0, 2))
    np.testing.assert_allclose(res.params_hat.alpha, np.log(means), atol=0.1)
    ci = confidence_intervals(res, 0.999)
    beta_rows = [1, 2, 4, 5]
    assert np.all((ci[beta_rows, 0] < 0) & (ci[beta_rows, 1] > 0))


def _to_alpha_beta_order(res):
    k = res.params_hat.n_colors
    return np.concatenate([res.params_hat.alpha, res.params_hat.beta.ravel()])


def test_fit_matches_generic_optimizer(rng):
    for _ in range(3):
        _, y = random_instance(rng, n=4, T=3)
        res = fit(y, build_grid(4))
        th, ll = generic_mle(y, 4)
        np.testing.assert_allclose(_to_alpha_beta_order(res), th, atol=1e-6)
        assert res.loglik == pytest.approx(ll, abs=1e-9)


def test_separability_bit_for_bit(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    st_ = precompute_stats(y, geom)
    for c in range(3):
        cf = fit_color(st_, y.counts[1:, c, :], np.ones(3, bool), c)
        assert cf.coef.tobytes() == res.params_hat.color_block(c).tobytes()


def test_monotone_ascent(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    for cf in res.color_fits:
        assert all(inc >= 0 for inc in cf.increments)
        tr = np.array(cf.trace)
        assert np.all(np.diff(tr) >= -1e-12 * np.abs(tr[:-1]))


def test_concave_objective_two_starts(model1_data):
    geom, y = model1_data
    st_ = precompute_stats(y, geom)
    for c in range(3):
        yc = y.counts[1:, c, :]
        a = fit_color(st_, yc, np.ones(3, bool), c)
        b = fit_color(st_, yc, np.ones(3, bool), c, start=[0.5, -0.3, 0.2, 0.1])
        assert abs(a.loglik - b.loglik) <= 1e-8
        np.testing.assert_allclose(a.coef, b.coef, atol=1e-7)


def test_rank_deficiency_named():
    rng = np.random.default_rng(0)
    counts = np.zeros((4, 2, 16), dtype=np.int64)
    counts[:, 0] = rng.poisson(2, (4, 16))
    with pytest.raises(RankDeficiencyError) as exc:
        fit(CountTensor(counts), build_grid(4))
    assert "S[1]" in exc.value.columns


def test_nonconvergence_carries_partial(model1_data):
    geom, y = model1_data
    with pytest.raises(ConvergenceError) as exc:
        fit(y, geom, max_iter=1)
    assert exc.value.partial is not None


def test_information_criteria(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    assert res.aic == pytest.approx(-2 * res.loglik + 2 * 12)
    assert res.bic == pytest.approx(-2 * res.loglik + 12 * math.log(625 * 10))
    assert information_criteria(-10.0, 2, 100) == (24.0, 20 + 2 * math.log(100))


def test_sandwich_intercept_only_closed_form():
    p = Params([0.4], [[0.0]])
    g = build_grid(10)
    y = simulate(SimConfig(p, g, 4, 1, 3))
    res = fit(y, g, np.zeros((1, 1), bool))
    total = y.counts[1:].sum()
    assert res.cov.shape == (1, 1)
    assert res.cov[0, 0] == pytest.approx(1.0 / total, rel=1e-10)
    assert res.cov[0, 0] == pytest.approx(1.0 / (100 * 4 * y.counts[1:].mean()), rel=1e-10)


def test_sandwich_equals_inverse_numeric_hessian(rng):
    _, y = random_instance(rng, n=4, T=3)
    g = build_grid(4)
    res = fit(y, g)
    st_ = precompute_stats(y, g)
    mask = res.mask

    def negll(th):
        return -loglik(Params.from_vector(th, mask), y, st_)

    H = numeric_hessian(negll, res.theta, 1e-4)
    V = sandwich_cov(res.params_hat, st_)
    Vnum = np.linalg.inv(H)
    block = V != 0
    np.testing.assert_allclose(V[block], Vnum[block], rtol=1e-4)
    # cross-color entries are exactly zero analytically; the numeric ones are FD noise
    assert np.max(np.abs(Vnum[~block])) < 1e-6


def test_cov_symmetric_psd(model1_data):
    geom, y = model1_data
    res = fit(y, geom, np.array([[1, 0, 1], [1, 1, 0], [0, 0, 1]], bool))
    assert res.cov.shape == (res.p, res.p)
    np.testing.assert_array_equal(res.cov, res.cov.T)
    assert np.all(np.linalg.eigvalsh(res.cov) > 0)
    np.testing.assert_allclose(res.se, np.sqrt(np.diag(res.cov)))
    # block diagonal across colors
    assert np.all(res.cov[:3, 3:] == 0)


def test_confidence_interval_multiplier(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    ci = confidence_intervals(res, 0.95)
    np.testing.assert_allclose((ci[:, 1] - res.theta) / res.se, 1.959964, atol=1e-6)
    for bad in (0.0, 1.0, -0.5, 1.5):
        with pytest.raises(InvalidArgumentError):
            confidence_intervals(res, bad)


def test_ci_width_rate():
    p = preset_params(1)
    widths = {}
    for n in (20, 40):
        w = []
        for r in range(5):
            g = build_grid(n)
            y = simulate(SimConfig(p, g, 10, 10, 300 + r))
            ci = confidence_intervals(fit(y, g), 0.95)
            w.append(np.mean(ci[:, 1] - ci[:, 0]))
        widths[n] = np.mean(w)
    assert widths[20] / widths[40] == pytest.approx(2.0, rel=0.10)


def test_fit_result_roundtrip(model1_data):
    geom, y = model1_data
    res = fit(y, geom)
    back = FitResult.from_dict(res.to_dict())
    np.testing.assert_array_equal(back.theta, res.theta)
    np.testing.assert_array_equal(back.cov, res.cov)
    assert back.T == 10 and back.n_tiles == 625 and back.p == 12


def test_mask_shape_checked(model1_data):
    geom, y = model1_data
    with pytest.raises(InvalidArgumentError):
        fit(y, geom, np.ones((2, 2), bool))
