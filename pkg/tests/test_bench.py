import math

import numpy as np
import pytest

from svjfilt import (GridSpec, ModelParams, ModelVariant, ape, fit_power_law,
                     matched_speed_comparison, random_params, run_ape_study,
                     run_bias_study, run_tradeoff_sweep, simulate)
from svjfilt.bench import DRAW_BOUNDS
from svjfilt.models import ACTIVE_PARAMS


def _sv_params():
    return ModelParams(ModelVariant.SV, mu=0.05, kappa=3.0, theta=0.04,
                       sigma=0.35, rho_v=-0.6)


def test_ape_basic_values():
    assert ape(-101.0, -100.0) == 1.0
    assert ape(-100.01, -100.0) == pytest.approx(0.01)
    assert ape(55.5, 55.5) == 0.0
    with pytest.raises(ValueError):
        ape(1.0, 0.0)
    with pytest.raises(ValueError):
        ape(1.0, 1e-13)


@pytest.mark.parametrize("variant", list(ModelVariant))
def test_random_params_respect_box(variant):
    rng = np.random.default_rng(31)
    for _ in range(300):
        p = random_params(variant, rng)
        d = p.as_dict()
        for name in ACTIVE_PARAMS[variant]:
            if name == "rho_lam":
                continue
            lo, hi = DRAW_BOUNDS[name]
            assert lo <= d[name] <= hi, name
        assert p.rho_v ** 2 + p.rho_lam ** 2 < 1.0
    if variant is ModelVariant.SV:
        assert p.omega == 0.0 and p.nu == 0.0


def test_random_params_deterministic_per_seed():
    a = random_params(ModelVariant.SVCJ, 7)
    b = random_params(ModelVariant.SVCJ, 7)
    assert a.as_dict() == b.as_dict()


def test_random_params_bounds_override():
    rng = np.random.default_rng(3)
    for _ in range(50):
        p = random_params(ModelVariant.SV, rng, bounds={"kappa": (2.0, 2.5)})
        assert 2.0 <= p.kappa <= 2.5


def test_random_params_exhaustion_raises():
    # rho_z * nu >= 2 on this box, so every draw violates the compensator
    # constraint and the rejection loop must give up
    with pytest.raises(RuntimeError):
        random_params(ModelVariant.SVCJ, 0,
                      bounds={"rho_z": (100.0, 101.0), "nu": (0.02, 0.03)},
                      max_tries=50)


def test_fit_power_law_exact_recovery():
    x = np.arange(25, 201, 25, dtype=float)
    y = 3.5 * x ** -1.8
    a, b, resid = fit_power_law(x, y)
    assert a == pytest.approx(3.5, rel=1e-10)
    assert b == pytest.approx(-1.8, rel=1e-10)
    assert np.max(np.abs(resid)) < 1e-12


def test_ape_study_reproducible_and_consistent():
    kwargs = dict(n_trials=4, series_len=25,
                  dnf_spec=GridSpec(n_v=50, n_lam=1, n_j=0, r_max=0),
                  n_particles=2000, seed=7)
    rep = run_ape_study(ModelVariant.SV, **kwargs)
    rep2 = run_ape_study(ModelVariant.SV, **kwargs)
    assert np.array_equal(rep.apes, rep2.apes)
    assert len(rep.apes) + rep.n_failures == 4
    for t in rep.trials:
        assert t.ape == ape(t.loglik_dnf, t.loglik_ref)
    levels = sorted(rep.quantiles)
    qs = [rep.quantiles[lvl] for lvl in levels]
    assert qs == sorted(qs)
    rows = rep.as_rows()
    assert len(rows) == len(rep.trials)
    assert {"trial", "seed", "ape", "mu", "kappa"} <= set(rows[0])


def test_tradeoff_sweep_micro():
    y = simulate(_sv_params(), 30, seed=12).y
    rep = run_tradeoff_sweep(ModelVariant.SV, y, n_list=(25, 50),
                             n_reference=150, n_draws=3, seed=5,
                             sir_budgets=(300,), sir_reps=2,
                             timing_repeats=2)
    assert rep.n_values == (25, 50)
    assert rep.mapes.shape == (2,)
    assert np.all(rep.mapes >= 0.0)
    assert rep.median_seconds(25) > 0.0
    assert math.isfinite(rep.power_b)
    assert len(rep.sir_samples[300]) == 2
    rows = rep.as_rows()
    assert [r["n"] for r in rows] == [25, 50]
    assert all(r["seconds"] > 0.0 for r in rows)


def test_matched_speed_comparison_micro():
    p = _sv_params()
    y = simulate(p, 30, seed=2).y
    cmp = matched_speed_comparison(p, y, target_mape=5.0, n_ladder=(25,),
                                   particle_ladder=(500, 1000),
                                   n_reference=150, sir_reps=3,
                                   timing_repeats=2)
    assert cmp.dnf_n == 25
    assert cmp.dnf_ape <= 5.0
    assert cmp.sir_particles in (500, 1000)
    assert cmp.sir_mape <= 5.0
    assert cmp.dnf_median_seconds > 0.0 and cmp.sir_median_seconds > 0.0
    with pytest.raises(RuntimeError):
        matched_speed_comparison(p, y, target_mape=1e-12, n_ladder=(25,),
                                 n_reference=150)


def test_bias_study_micro():
    true = _sv_params()
    rep = run_bias_study(ModelVariant.SV, true, n_reps=2, series_len=40,
                         seed=3, grid_spec=GridSpec(n_v=30, n_lam=1, n_j=0,
                                                    r_max=0),
                         maxiter=40)
    names = set(ACTIVE_PARAMS[ModelVariant.SV])
    assert set(rep.biases) == names and set(rep.rmses) == names
    for n in names:
        # on the same sample, rmse**2 = bias**2 + variance >= bias**2
        assert abs(rep.biases[n]) <= rep.rmses[n] + 1e-12
    assert len(rep.estimates) == 2
    assert len(rep.as_rows()) == len(names)
    with pytest.raises(ValueError):
        run_bias_study(ModelVariant.SVYJ, true, n_reps=1)
