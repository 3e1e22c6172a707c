import numpy as np
import pytest

from svjfilt import (GridSpec, ModelParams, ModelVariant, filter_prepared,
                     prepare_filter)


def moderate_sv_params(rng: np.random.Generator, variant=ModelVariant.SV,
                       feller_min: float = 1.5) -> ModelParams:
    """Random parameter draw from a well-conditioned box.

    Keeps the variance and intensity processes comfortably away from the
    zero boundary (Feller ratio at or above ``feller_min``) so that
    moderate grids resolve the latent laws.  The intensity coupling is
    kept moderate (slow-decaying chi excluded, |rho_lam| capped): the
    return density reads the intensity through rho_lam, so likelihood
    error grows with rho_lam^2 times the intensity quantization step,
    which scales like 1 / (n_lam sqrt(chi h)).
    """
    while True:
        kw = dict(
            mu=rng.uniform(-0.1, 0.1),
            kappa=rng.uniform(1.0, 8.0),
            theta=rng.uniform(0.015, 0.08),
            sigma=rng.uniform(0.1, 0.6),
            rho_v=rng.uniform(-0.9, 0.9),
        )
        if 2.0 * kw["kappa"] * kw["theta"] / kw["sigma"] ** 2 < feller_min:
            continue
        if variant is not ModelVariant.SV:
            kw.update(
                omega=rng.uniform(0.5, 8.0),
                alpha=rng.uniform(-0.05, 0.05),
                delta=rng.uniform(0.005, 0.05),
            )
        if variant in (ModelVariant.SVCJ, ModelVariant.SVCJSI):
            kw.update(
                nu=rng.uniform(0.002, 0.02),
                rho_z=rng.uniform(-3.0, 3.0),
            )
        if variant is ModelVariant.SVCJSI:
            kw.update(
                chi=rng.uniform(2.5, 6.0),
                xi=rng.uniform(0.3, 3.0),
                rho_lam=rng.uniform(-0.3, 0.3),
            )
            if 2.0 * kw["chi"] * kw["omega"] / kw["xi"] ** 2 < feller_min:
                continue
            if kw["rho_v"] ** 2 + kw["rho_lam"] ** 2 > 0.9:
                continue
        try:
            return ModelParams(variant=variant, **kw)
        except ValueError:
            continue


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # Compile both filter kernels up front so per-test timings and the
    # runtime budgets in the acceptance tests measure execution only.
    sv = ModelParams(ModelVariant.SV, mu=0.05, kappa=3.0, theta=0.04,
                     sigma=0.3, rho_v=-0.5)
    y = np.array([0.001, -0.002, 0.0005])
    filter_prepared(prepare_filter(sv, GridSpec(n_v=8)), y)
    svcjsi = ModelParams(ModelVariant.SVCJSI, mu=0.05, kappa=3.0, theta=0.04,
                         sigma=0.3, rho_v=-0.5, chi=2.0, omega=2.0, xi=0.5,
                         rho_lam=-0.2, alpha=-0.02, delta=0.03, nu=0.01,
                         rho_z=-1.0)
    filter_prepared(
        prepare_filter(svcjsi, GridSpec(n_v=6, n_lam=5, n_j=4, r_max=2)), y)
