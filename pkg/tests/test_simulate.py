import numpy as np
import pytest
from scipy import stats

from mcgrowth import ExplosiveProcessError, InvalidArgumentError, Params, SimConfig, build_grid, simulate, simulate_onestep
from mcgrowth.experiments import preset_params
from mcgrowth.simulate import make_rng


def test_seed_slice_and_shape():
    p = Params([-0.1, -0.1], np.zeros((2, 2)))
    y = simulate(SimConfig(p, build_grid(3), 4, seed_count=2, rng_seed=5))
    assert y.counts.shape == (5, 2, 9)
    assert np.all(y.counts[0] == 2)


def test_independence_case_mean():
    p = Params([-0.1], [[0.0]])
    T = 8
    y = simulate(SimConfig(p, build_grid(25), T, 1, 3))
    draws = y.counts[1:].ravel()
    lam = np.exp(-0.1)
    assert abs(draws.mean() - lam) < 3 * np.sqrt(lam / draws.size)


def test_model1_moderate_growth():
    y = simulate(SimConfig(preset_params(1), build_grid(25), 10, 1, 1))
    totals = y.counts.sum(axis=(1, 2))
    assert totals[-1] > totals[0]
    assert np.all(totals[1:] < 10 * totals[0])


def test_determinism():
    cfg = SimConfig(preset_params(2), build_grid(10), 6, 3, 99)
    a, b = simulate(cfg), simulate(cfg)
    assert a.counts.tobytes() == b.counts.tobytes()
    c = simulate(SimConfig(preset_params(2), build_grid(10), 6, 3, 100))
    assert a.counts.tobytes() != c.counts.tobytes()


def test_draw_order_contract():
    # the trajectory equals slice-by-slice poisson draws from one PCG64 stream
    p = preset_params(1)
    g = build_grid(4)
    y = simulate(SimConfig(p, g, 3, 2, 7))
    rng = make_rng(7)
    prev = np.full((3, 16), 2)
    for t in range(1, 4):
        nxt = simulate_onestep(p, g, prev, rng)
        np.testing.assert_array_equal(nxt, y.counts[t])
        prev = nxt


def test_onestep_zero_prev_is_pois1():
    p = Params([0.0, 0.0], [[3.0, -2.0], [1.0, 5.0]])
    g = build_grid(30)
    draws = simulate_onestep(p, g, np.zeros((2, 900), dtype=int), make_rng(1)).ravel()
    assert abs(draws.mean() - 1.0) < 4 * np.sqrt(1.0 / draws.size)


def test_onestep_zero_intensity_limit():
    p = Params([-30.0], [[0.0]])
    draws = simulate_onestep(p, build_grid(10), np.ones((1, 100), dtype=int), make_rng(2))
    assert draws.sum() == 0


def test_explosion_guard():
    p = Params([0.0], [[400.0]])
    with pytest.raises(ExplosiveProcessError) as exc:
        simulate(SimConfig(p, build_grid(2), 3, 5, 0))
    assert exc.value.t == 1 and exc.value.c == 0 and exc.value.i == 0


def test_config_validation():
    p = Params([0.0], [[0.0]])
    with pytest.raises(InvalidArgumentError):
        SimConfig(p, build_grid(2), 0)
    with pytest.raises(InvalidArgumentError):
        SimConfig(p, build_grid(2), 1, seed_count=-1)
    with pytest.raises(InvalidArgumentError):
        SimConfig(p, build_grid(2), 1, initial=np.zeros((2, 4)))


def test_explicit_initial_slice():
    p = Params([0.0, 0.0], np.zeros((2, 2)))
    init = np.arange(8).reshape(2, 4)
    y = simulate(SimConfig(p, build_grid(2), 2, rng_seed=4, initial=init))
    np.testing.assert_array_equal(y.counts[0], init)


def test_marginal_chisquare_small():
    lam = np.exp(-0.1)
    y = simulate(SimConfig(Params([-0.1], [[0.0]]), build_grid(20), 50, 1, 8))
    x = y.counts[1:].ravel()
    k = 5
    obs = np.array([np.sum(x == j) for j in range(k)] + [np.sum(x >= k)])
    probs = np.append(stats.poisson.pmf(np.arange(k), lam), stats.poisson.sf(k - 1, lam))
    assert stats.chisquare(obs, probs * x.size).pvalue > 0.01
