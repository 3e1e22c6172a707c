import math

import numpy as np
import pytest
from scipy import stats

from svjfilt import (DEFAULT_PARTICLES, GridSpec, ModelParams, ModelVariant,
                     ParticleCloud, ParticleCollapseError, resample_systematic,
                     run_filter, simulate, sir_likelihood)


class _FixedUniform:
    """Stands in for a Generator when the test pins the single uniform."""

    def __init__(self, u):
        self._u = u

    def random(self):
        return self._u


def _sv(**kw):
    base = dict(mu=0.05, kappa=3.0, theta=0.04, sigma=0.3, rho_v=-0.6)
    base.update(kw)
    return ModelParams(ModelVariant.SV, **base)


def test_systematic_counts_at_pinned_uniform():
    idx = resample_systematic(np.array([0.75, 0.25]), 4, _FixedUniform(0.1))
    assert np.bincount(idx, minlength=2).tolist() == [3, 1]


def test_systematic_uniform_weights_identity():
    for seed in range(10):
        idx = resample_systematic(np.full(8, 0.125), 8,
                                  np.random.default_rng(seed))
        assert np.array_equal(idx, np.arange(8))


def test_systematic_integer_shares_exact():
    # weights that are integer multiples of 1/n_out yield exact copy counts
    # no matter where the stratified positions fall
    w = np.array([0.5, 0.25, 0.25])
    for seed in range(10):
        idx = resample_systematic(w, 8, np.random.default_rng(seed))
        assert np.bincount(idx, minlength=3).tolist() == [4, 2, 2]


def test_systematic_rejects_bad_weights():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        resample_systematic(np.empty(0), 4, rng)
    with pytest.raises(ValueError):
        resample_systematic(np.zeros(3), 4, rng)
    with pytest.raises(ValueError):
        resample_systematic(np.array([np.inf, 1.0]), 4, rng)


def test_cloud_validation():
    ParticleCloud(v=np.array([0.04, 0.05]), lam=np.zeros(2),
                  weights=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        ParticleCloud(v=np.array([0.04]), lam=np.zeros(2),
                      weights=np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        ParticleCloud(v=np.array([-0.01, 0.05]), lam=np.zeros(2),
                      weights=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        ParticleCloud(v=np.array([0.04, 0.05]), lam=np.zeros(2),
                      weights=np.array([0.5, 0.6]))


def test_sir_matches_closed_form_in_degenerate_limit():
    p = _sv(sigma=1e-4, rho_v=0.0)
    y = np.array([0.01, -0.005, 0.002])
    ll, contribs = sir_likelihood(p, y, n_particles=20_000, seed=3)
    closed = stats.norm.logpdf(y, loc=(p.mu - 0.5 * p.theta) * p.h,
                               scale=math.sqrt(p.theta * p.h))
    assert ll == pytest.approx(float(closed.sum()), abs=2e-3)
    np.testing.assert_allclose(contribs, closed, atol=2e-3)


def test_sir_reproducible_per_seed():
    p = _sv()
    y = simulate(p, 15, seed=7).y
    a, ca = sir_likelihood(p, y, n_particles=5_000, seed=11)
    b, cb = sir_likelihood(p, y, n_particles=5_000, seed=11)
    c, _ = sir_likelihood(p, y, n_particles=5_000, seed=12)
    assert a == b
    assert np.array_equal(ca, cb)
    assert a != c


def test_sir_noise_shrinks_with_particles():
    p = _sv()
    y = simulate(p, 20, seed=19).y
    small = [sir_likelihood(p, y, n_particles=500, seed=s)[0]
             for s in range(40)]
    big = [sir_likelihood(p, y, n_particles=2_000, seed=1000 + s)[0]
           for s in range(40)]
    ratio = np.var(small, ddof=1) / np.var(big, ddof=1)
    # 4x particles should cut the variance roughly 4x
    assert 1.5 < ratio < 12.0


def test_sir_agrees_with_grid_filter():
    p = _sv()
    y = simulate(p, 60, seed=23).y
    dnf = run_filter(p, y, GridSpec(n_v=200, n_lam=1, n_j=0,
                                    r_max=0)).total_loglik
    sir, _ = sir_likelihood(p, y, n_particles=50_000, seed=5)
    assert abs((sir - dnf) / dnf) < 0.003


def test_sir_collapse_reports_step():
    p = _sv()
    y = np.array([0.002, np.inf])
    with pytest.raises(ParticleCollapseError) as exc:
        sir_likelihood(p, y, n_particles=100, seed=0)
    assert exc.value.t == 1


def test_sir_input_validation():
    p = _sv()
    with pytest.raises(ValueError):
        sir_likelihood(p, np.empty(0), n_particles=100)
    with pytest.raises(ValueError):
        sir_likelihood(p, np.array([0.01]), n_particles=1)


def test_default_budgets_cover_all_variants():
    assert set(DEFAULT_PARTICLES) == set(ModelVariant)
    assert all(n >= 100_000 for n in DEFAULT_PARTICLES.values())
