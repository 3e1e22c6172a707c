import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svjfilt import (ACTIVE_PARAMS, PARAM_NAMES, LatentState, ModelParams,
                     ModelVariant)
from svjfilt.models import compensator, stationary_moments


def test_param_names_order():
    assert PARAM_NAMES == ("mu", "kappa", "theta", "sigma", "rho_v", "chi",
                           "omega", "xi", "rho_lam", "alpha", "delta",
                           "rho_z", "nu")


def test_active_param_counts():
    assert len(ACTIVE_PARAMS[ModelVariant.SV]) == 5
    assert len(ACTIVE_PARAMS[ModelVariant.SVYJ]) == 8
    assert len(ACTIVE_PARAMS[ModelVariant.SVCJ]) == 10
    assert len(ACTIVE_PARAMS[ModelVariant.SVCJSI]) == 13


def test_sv_restrictions_zero_jump_params():
    p = ModelParams(ModelVariant.SV, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5, alpha=-0.9, nu=0.5, omega=7.0)
    assert p.alpha == 0.0
    assert p.nu == 0.0
    assert p.omega == 0.0
    assert p.chi == 0.0
    assert not p.jumps_active
    assert not p.variance_jumps_active
    assert not p.intensity_stochastic


def test_svyj_restrictions():
    p = ModelParams(ModelVariant.SVYJ, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5, omega=4.0, alpha=-0.02,
                    delta=0.03, nu=0.8, rho_z=-2.0, xi=1.0)
    assert p.chi == 1.0
    assert p.xi == 0.0
    assert p.rho_lam == 0.0
    assert p.nu == 0.0
    assert p.rho_z == 0.0
    assert p.jumps_active
    assert not p.variance_jumps_active


def test_svcj_restrictions():
    p = ModelParams(ModelVariant.SVCJ, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5, omega=4.0, alpha=-0.02,
                    delta=0.03, nu=0.01, rho_z=-1.5, xi=2.0, rho_lam=0.4)
    assert p.chi == 1.0
    assert p.xi == 0.0
    assert p.rho_lam == 0.0
    assert p.variance_jumps_active
    assert not p.intensity_stochastic


def test_svcjsi_keeps_all_params():
    p = ModelParams(ModelVariant.SVCJSI, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5, chi=3.0, omega=4.0, xi=2.0,
                    rho_lam=-0.3, alpha=-0.02, delta=0.03, nu=0.01,
                    rho_z=-1.5)
    assert p.chi == 3.0
    assert p.xi == 2.0
    assert p.intensity_stochastic


@pytest.mark.parametrize("kw", [
    dict(sigma=0.0),
    dict(sigma=-0.1),
    dict(h=0.0),
    dict(theta=-0.01),
    dict(kappa=-1.0),
])
def test_invalid_base_params_rejected(kw):
    base = dict(mu=0.0, kappa=2.0, theta=0.04, sigma=0.3, rho_v=0.0)
    base.update(kw)
    with pytest.raises(ValueError):
        ModelParams(ModelVariant.SV, **base)


def test_joint_correlation_constraint():
    with pytest.raises(ValueError):
        ModelParams(ModelVariant.SVCJSI, mu=0.0, kappa=2.0, theta=0.04,
                    sigma=0.3, rho_v=0.8, chi=2.0, omega=2.0, xi=0.5,
                    rho_lam=0.7, alpha=0.0, delta=0.01, nu=0.01, rho_z=0.0)


def test_rho_z_nu_constraint():
    with pytest.raises(ValueError):
        ModelParams(ModelVariant.SVCJ, mu=0.0, kappa=2.0, theta=0.04,
                    sigma=0.3, rho_v=0.0, omega=2.0, alpha=0.0, delta=0.01,
                    nu=0.5, rho_z=3.0)


def test_compensator_sv_is_exact_zero():
    p = ModelParams(ModelVariant.SV, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5)
    assert compensator(p) == 0.0


def test_compensator_svyj_value():
    # exp(alpha + delta^2/2) - 1 with alpha=0.05, delta=0:
    # exp(0.05) - 1 = 0.05127109637602412
    p = ModelParams(ModelVariant.SVYJ, mu=0.0, kappa=2.0, theta=0.04,
                    sigma=0.3, rho_v=0.0, omega=2.0, alpha=0.05, delta=0.0)
    assert compensator(p) == pytest.approx(0.05127109637602412, rel=1e-12)


def test_compensator_svcj_value():
    # exp(-0.03 + 0.02^2/2)/(1 - (-1.0)(0.01)) - 1
    # = exp(-0.0298)/1.01 - 1 = -0.0389706514203737
    p = ModelParams(ModelVariant.SVCJ, mu=0.0, kappa=2.0, theta=0.04,
                    sigma=0.3, rho_v=0.0, omega=2.0, alpha=-0.03, delta=0.02,
                    nu=0.01, rho_z=-1.0)
    expected = math.exp(-0.03 + 0.0002) / 1.01 - 1.0
    assert expected == pytest.approx(-0.0389706514203737, rel=1e-12)
    assert compensator(p) == pytest.approx(expected, rel=1e-12)


def test_stationary_moments_sv():
    p = ModelParams(ModelVariant.SV, mu=0.0, kappa=4.0, theta=0.05,
                    sigma=0.4, rho_v=0.0)
    mom = stationary_moments(p)
    assert mom.e_v == pytest.approx(0.05)
    assert mom.var_v == pytest.approx(0.4 ** 2 * 0.05 / (2 * 4.0), rel=1e-12)
    assert mom.e_lam == 0.0
    assert mom.e_j == 0.0


def test_stationary_moments_svcjsi():
    p = ModelParams(ModelVariant.SVCJSI, mu=0.0, kappa=4.0, theta=0.05,
                    sigma=0.4, rho_v=0.0, chi=3.0, omega=4.0, xi=1.5,
                    rho_lam=0.0, alpha=-0.02, delta=0.03, nu=0.01, rho_z=0.0)
    mom = stationary_moments(p)
    assert mom.e_lam == pytest.approx(4.0)
    assert mom.var_lam == pytest.approx(1.5 ** 2 * 4.0 / (2 * 3.0), rel=1e-12)
    # variance-jump contribution: E J = omega h nu, Var J = 2 omega h nu^2
    assert mom.e_j == pytest.approx(4.0 * p.h * 0.01, rel=1e-12)
    assert mom.var_j == pytest.approx(2 * 4.0 * p.h * 0.01 ** 2, rel=1e-12)


def test_stationary_jump_moments_svcj():
    p = ModelParams(ModelVariant.SVCJ, mu=0.0, kappa=4.0, theta=0.05,
                    sigma=0.4, rho_v=0.0, omega=2.0, alpha=-0.02, delta=0.03,
                    nu=0.015, rho_z=-1.0)
    mom = stationary_moments(p)
    assert mom.e_j == pytest.approx(2.0 * p.h * 0.015, rel=1e-12)
    assert mom.var_lam == 0.0


def test_replace_revalidates():
    p = ModelParams(ModelVariant.SV, mu=0.05, kappa=3.0, theta=0.04,
                    sigma=0.3, rho_v=-0.5)
    q = p.replace(kappa=5.0)
    assert q.kappa == 5.0
    assert q.mu == p.mu
    assert q.variant is ModelVariant.SV
    with pytest.raises(ValueError):
        p.replace(sigma=-1.0)


def test_active_names_match_variant():
    p = ModelParams(ModelVariant.SVCJ, mu=0.0, kappa=2.0, theta=0.04,
                    sigma=0.3, rho_v=0.0, omega=2.0, alpha=0.0, delta=0.01,
                    nu=0.01, rho_z=0.0)
    assert p.active_names() == ACTIVE_PARAMS[ModelVariant.SVCJ]
    assert "chi" not in p.active_names()


def test_latent_state_validation():
    s = LatentState(v=0.04, lam=2.0, j_y=-0.01, j_v=0.003, n=1)
    assert s.v == 0.04
    with pytest.raises(ValueError):
        LatentState(v=-0.01, lam=2.0, j_y=0.0, j_v=0.0, n=0)
    with pytest.raises(ValueError):
        LatentState(v=0.04, lam=2.0, j_y=0.0, j_v=-0.1, n=0)


@settings(max_examples=50, deadline=None)
@given(
    mu=st.floats(-0.2, 0.2),
    kappa=st.floats(0.5, 9.0),
    theta=st.floats(0.01, 0.1),
    sigma=st.floats(0.1, 0.9),
    rho_v=st.floats(-0.9, 0.9),
)
def test_as_dict_round_trip(mu, kappa, theta, sigma, rho_v):
    p = ModelParams(ModelVariant.SV, mu=mu, kappa=kappa, theta=theta,
                    sigma=sigma, rho_v=rho_v)
    d = p.as_dict()
    q = ModelParams(variant=p.variant,
                    **{k: d[k] for k in PARAM_NAMES}, h=d["h"])
    assert p == q
