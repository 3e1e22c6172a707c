"""Model family: square-root stochastic volatility with optional jumps.

Daily log returns follow a discretized square-root volatility model.  The
richest variant carries compound-Poisson jumps in returns and variance with
a self-exciting (stochastic) jump intensity; restricted variants switch
those pieces off:

* ``SV``     pure diffusion, no jumps.
* ``SVYJ``   return jumps at a constant intensity.
* ``SVCJ``   correlated return and variance jumps, constant intensity.
* ``SVCJSI`` correlated jumps with square-root stochastic intensity.

One time step of length ``h`` (fractions of a year, 1/252 for daily data):

    y_t   = (mu - v/2 - abar*lam) h + sqrt(v h) eps_y + sum_i z_y(i)
    v'    = v + kappa (theta - v) h + sigma sqrt(v h) eps_v + sum_i z_v(i)
    lam'  = lam + chi (omega - lam) h + xi sqrt(lam h) eps_lam

with ``n ~ Poisson(lam h)`` jumps, ``z_v ~ Exp(nu)``,
``z_y | z_v ~ N(alpha + rho_z z_v, delta^2)``, and
``eps_y = sqrt(1 - rho_v^2 - rho_lam^2) eps_perp + rho_v eps_v + rho_lam eps_lam``.
``abar`` is the jump compensator keeping the drift arbitrage-consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import NamedTuple


class ModelVariant(Enum):
    """Nested model variants, from pure diffusion to stochastic intensity."""

    SV = "sv"
    SVYJ = "svyj"
    SVCJ = "svcj"
    SVCJSI = "svcjsi"


# Canonical parameter order used by the transforms and reports.
PARAM_NAMES = (
    "mu", "kappa", "theta", "sigma", "rho_v",
    "chi", "omega", "xi", "rho_lam",
    "alpha", "delta", "rho_z", "nu",
)

# Parameters that are free (estimated) per variant, in canonical order.
ACTIVE_PARAMS = {
    ModelVariant.SV: ("mu", "kappa", "theta", "sigma", "rho_v"),
    ModelVariant.SVYJ: ("mu", "kappa", "theta", "sigma", "rho_v",
                        "omega", "alpha", "delta"),
    ModelVariant.SVCJ: ("mu", "kappa", "theta", "sigma", "rho_v",
                        "omega", "alpha", "delta", "rho_z", "nu"),
    ModelVariant.SVCJSI: ("mu", "kappa", "theta", "sigma", "rho_v",
                          "chi", "omega", "xi", "rho_lam",
                          "alpha", "delta", "rho_z", "nu"),
}

# Values forced on construction for the switched-off pieces of each variant.
_RESTRICTIONS = {
    ModelVariant.SV: {"chi": 0.0, "omega": 0.0, "xi": 0.0, "rho_lam": 0.0,
                      "alpha": 0.0, "delta": 0.0, "rho_z": 0.0, "nu": 0.0},
    ModelVariant.SVYJ: {"chi": 1.0, "xi": 0.0, "rho_lam": 0.0,
                        "rho_z": 0.0, "nu": 0.0},
    ModelVariant.SVCJ: {"chi": 1.0, "xi": 0.0, "rho_lam": 0.0},
    ModelVariant.SVCJSI: {},
}


@dataclass(frozen=True)
class ModelParams:
    """Parameter set for one variant; invalid combinations are rejected.

    Constructing params for a restricted variant silently forces the
    switched-off values (idempotent), so e.g. any ``chi`` passed for an
    ``SV`` model becomes 0.

    Parameters
    ----------
    variant : ModelVariant
    mu : float
        Annualized drift of log returns.
    kappa, theta, sigma : float
        Variance mean reversion speed, long-run level, and vol-of-vol.
    rho_v : float
        Correlation between return and variance shocks.
    chi, omega, xi : float
        Intensity mean reversion speed, long-run level, and volatility.
        For constant-intensity variants chi is fixed at 1 and xi at 0.
    rho_lam : float
        Correlation between return and intensity shocks (SVCJSI only).
    alpha, delta : float
        Mean and standard deviation of the Gaussian part of return jumps.
    rho_z : float
        Loading of return jumps on the variance jump size.
    nu : float
        Mean of the exponential variance jump size.
    h : float
        Step length in years, 1/252 by default.
    """

    variant: ModelVariant
    mu: float = 0.0
    kappa: float = 1.0
    theta: float = 0.04
    sigma: float = 0.3
    rho_v: float = 0.0
    chi: float = 0.0
    omega: float = 0.0
    xi: float = 0.0
    rho_lam: float = 0.0
    alpha: float = 0.0
    delta: float = 0.0
    rho_z: float = 0.0
    nu: float = 0.0
    h: float = 1.0 / 252.0

    def __post_init__(self):
        for name, value in _RESTRICTIONS[self.variant].items():
            object.__setattr__(self, name, value)
        # Coerce to plain floats so downstream numba kernels see float64.
        for f in fields(self):
            if f.name != "variant":
                object.__setattr__(self, f.name, float(getattr(self, f.name)))
        self._validate()

    def _validate(self):
        if not (self.h > 0.0):
            raise ValueError(f"h must be positive, got {self.h}")
        if not (self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        for name in ("kappa", "theta", "chi", "omega", "xi", "delta", "nu"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative, "
                                 f"got {getattr(self, name)}")
        rho2 = self.rho_v ** 2 + self.rho_lam ** 2
        if not (rho2 < 1.0):
            raise ValueError(
                f"rho_v^2 + rho_lam^2 must be < 1, got {rho2:.6f}")
        # Correlation with the intensity shock needs that shock to exist.
        if self.rho_lam != 0.0 and self.xi == 0.0:
            raise ValueError("rho_lam requires a diffusive intensity, "
                             "set xi > 0 or rho_lam = 0")
        # Jump compensator exists only when the exponential tilt converges.
        if not (self.rho_z * self.nu < 1.0):
            raise ValueError(
                f"rho_z * nu must be < 1, got {self.rho_z * self.nu:.6f}")

    @property
    def jumps_active(self) -> bool:
        return self.variant is not ModelVariant.SV

    @property
    def variance_jumps_active(self) -> bool:
        return self.variant in (ModelVariant.SVCJ, ModelVariant.SVCJSI)

    @property
    def intensity_stochastic(self) -> bool:
        return self.variant is ModelVariant.SVCJSI

    def active_names(self) -> tuple:
        return ACTIVE_PARAMS[self.variant]

    def replace(self, **changes) -> "ModelParams":
        """Return a copy with the given fields changed."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ModelParams(**values)

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in PARAM_NAMES}
        d["variant"] = self.variant.value
        d["h"] = self.h
        return d


@dataclass(frozen=True)
class LatentState:
    """Latent state at one time step: variance, intensity, and jump tally."""

    v: float
    lam: float
    j_y: float = 0.0   # aggregate return jump
    j_v: float = 0.0   # aggregate variance jump
    n: int = 0         # jump count

    def __post_init__(self):
        if self.v < 0.0 or self.lam < 0.0:
            raise ValueError("variance and intensity must be nonnegative")
        if self.j_v < 0.0:
            raise ValueError("aggregate variance jump must be nonnegative")
        if self.n < 0 or self.n != int(self.n):
            raise ValueError("jump count must be a nonnegative integer")


class StationaryMoments(NamedTuple):
    e_v: float
    var_v: float
    e_lam: float
    var_lam: float
    e_j: float     # mean aggregate variance jump over one step
    var_j: float   # variance of the aggregate variance jump over one step


def compensator(params: ModelParams) -> float:
    """Jump compensator ``abar`` entering the return drift.

    ``abar = exp(alpha + delta^2 / 2) / (1 - rho_z * nu) - 1``; the expected
    relative price move caused by one jump.  Exactly 0 for jump-free
    variants.
    """
    if not params.jumps_active:
        return 0.0
    return math.exp(params.alpha + 0.5 * params.delta ** 2) \
        / (1.0 - params.rho_z * params.nu) - 1.0


def state_floors(params: ModelParams, eps: float = 1e-8) -> tuple:
    """Smallest variance and intensity levels the likelihood routes resolve.

    One Euler step out of an absorbed state lands exactly on the drift
    rebound ``kappa theta h`` (variance) resp. ``chi omega h`` (intensity),
    so the discretized dynamics never separate states below that level, and
    a state of exactly zero would make the return density degenerate.  Every
    likelihood route (grid, particle, Monte-Carlo) clamps its states here so
    all of them evaluate the same regularized model; ``eps`` guards
    dimensions whose rebound level is zero.
    """
    v_floor = max(eps, params.kappa * params.theta * params.h)
    lam_floor = max(eps, params.chi * params.omega * params.h)
    return v_floor, lam_floor


def stationary_moments(params: ModelParams) -> StationaryMoments:
    """Stationary mean/variance of v and lam plus one-step jump moments.

    Square-root processes have Gamma stationary laws with
    ``E[v] = theta``, ``Var[v] = sigma^2 theta / (2 kappa)`` and the
    analogous pair for the intensity.  The aggregate variance jump over one
    step is compound Poisson-exponential at the long-run intensity:
    ``E[J] = omega h nu``, ``Var[J] = 2 omega h nu^2``.

    Requires ``kappa > 0`` (and ``chi > 0`` when the intensity is
    stochastic); otherwise no stationary law exists.
    """
    if params.kappa <= 0.0:
        raise ValueError("stationary moments require kappa > 0")
    e_v = params.theta
    var_v = params.sigma ** 2 * params.theta / (2.0 * params.kappa)
    if params.intensity_stochastic:
        if params.chi <= 0.0:
            raise ValueError("stationary intensity moments require chi > 0")
        e_lam = params.omega
        var_lam = params.xi ** 2 * params.omega / (2.0 * params.chi)
    elif params.jumps_active:
        e_lam, var_lam = params.omega, 0.0
    else:
        e_lam, var_lam = 0.0, 0.0
    if params.variance_jumps_active:
        e_j = params.omega * params.h * params.nu
        var_j = 2.0 * params.omega * params.h * params.nu ** 2
    else:
        e_j, var_j = 0.0, 0.0
    return StationaryMoments(e_v, var_v, e_lam, var_lam, e_j, var_j)
