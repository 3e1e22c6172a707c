"""Conditional measurement density and latent transition laws.

The return ``y_t`` given the latent states at ``t-1`` and ``t`` is Gaussian:
integrating the independent return shock ``eps_perp`` and the Gaussian part
of the return jumps leaves

    y_t | (v_t, v_{t-1}, lam_t, lam_{t-1}, j_v, n) ~ N(m_t, s_t^2)
    m_t   = (mu - v/2 - abar lam) h + sqrt(v h) (rho_v eps_v + rho_lam eps_lam)
            + alpha n + rho_z j_v
    s_t^2 = v (1 - rho_v^2 - rho_lam^2) h + n delta^2

where v, lam are the time ``t-1`` values and the diffusion shocks are
recovered from the realized transitions:

    eps_v   = (v_t - v - kappa (theta - v) h - j_v) / (sigma sqrt(v h))
    eps_lam = (lam_t - lam - chi (omega - lam) h) / (xi sqrt(lam h))

Everything is computed in log space; callers exponentiate at aggregation
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .models import ModelParams, compensator

_LOG_2PI = math.log(2.0 * math.pi)


def _normal_logpdf(x, mean, var):
    """Log N(mean, var) density; -inf where var == 0 (degenerate limit)."""
    x, mean, var = np.broadcast_arrays(x, mean, var)
    out = np.full(np.shape(x), -np.inf, dtype=float)
    ok = var > 0.0
    if np.any(ok):
        d = np.asarray(x, float)[ok] - np.asarray(mean, float)[ok]
        va = np.asarray(var, float)[ok]
        out[ok] = -0.5 * (_LOG_2PI + np.log(va) + d * d / va)
    if out.ndim == 0:
        return float(out)
    return out


def measurement_logpdf(y, v_t, v_prev, lam_t, lam_prev, j_v, n,
                       params: ModelParams):
    """Log density of the return given latent states at both ends of a step.

    All state arguments broadcast.  The sqrt in the eps_v coupling cancels:
    ``sqrt(v h) rho_v eps_v = (rho_v / sigma)(v_t - v - kappa(theta - v)h - j_v)``,
    so ``v_prev == 0`` never divides by zero; the density is then degenerate
    (``-inf`` unless ``n > 0`` supplies jump variance).
    """
    p = params
    abar = compensator(p)
    v_prev = np.asarray(v_prev, float)
    n = np.asarray(n, float)
    mean = (p.mu - 0.5 * v_prev - abar * np.asarray(lam_prev, float)) * p.h
    mean = mean + (p.rho_v / p.sigma) * (
        np.asarray(v_t, float) - v_prev - p.kappa * (p.theta - v_prev) * p.h
        - np.asarray(j_v, float))
    if p.xi > 0.0 and p.rho_lam != 0.0:
        lam_prev = np.asarray(lam_prev, float)
        lam_t = np.asarray(lam_t, float)
        drift = lam_prev + p.chi * (p.omega - lam_prev) * p.h
        with np.errstate(divide="ignore", invalid="ignore"):
            coupling = (p.rho_lam / p.xi) * np.sqrt(v_prev / lam_prev) \
                * (lam_t - drift)
        # lam_prev == 0 makes the intensity step deterministic; no coupling.
        coupling = np.where(lam_prev > 0.0, coupling, 0.0)
        mean = mean + coupling
    mean = mean + p.alpha * n + p.rho_z * np.asarray(j_v, float)
    var = v_prev * (1.0 - p.rho_v ** 2 - p.rho_lam ** 2) * p.h \
        + n * p.delta ** 2
    return _normal_logpdf(y, mean, var)


def measurement_density(y, v_t, v_prev, lam_t, lam_prev, j_v, n,
                        params: ModelParams):
    """Level version of :func:`measurement_logpdf`."""
    return np.exp(measurement_logpdf(y, v_t, v_prev, lam_t, lam_prev,
                                     j_v, n, params))


def shock_measurement_logpdf(y, v_prev, lam_prev, n, j_v, eps_v, eps_lam,
                             params: ModelParams):
    """Log return density given the *sampled* diffusion shocks.

    Equivalent to :func:`measurement_logpdf` whenever the states were not
    floored, since then the state pair determines the shock; the shock form
    avoids all divisions, so it also accepts zero states.
    """
    p = params
    abar = compensator(p)
    v_prev = np.asarray(v_prev, float)
    n = np.asarray(n, float)
    mean = (p.mu - 0.5 * v_prev - abar * np.asarray(lam_prev, float)) * p.h \
        + np.sqrt(v_prev * p.h) * (p.rho_v * np.asarray(eps_v, float)
                                   + p.rho_lam * np.asarray(eps_lam, float)) \
        + p.alpha * n + p.rho_z * np.asarray(j_v, float)
    var = v_prev * (1.0 - p.rho_v ** 2 - p.rho_lam ** 2) * p.h \
        + n * p.delta ** 2
    return _normal_logpdf(y, mean, var)


def poisson_pmf(n, lam_prev, h):
    """P(n jumps | lam_prev) with one-step mean ``lam_prev * h``.

    ``lam_prev == 0`` gives a unit point mass at ``n == 0`` exactly.
    """
    n = np.asarray(n)
    m = np.asarray(lam_prev, float) * h
    if np.all(m == 0.0):
        return np.where(n == 0, 1.0, 0.0) if n.ndim else float(n == 0)
    out = stats.poisson.pmf(n, m)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TransitionLaws:
    """The four conditional laws driving one latent step.

    Each cdf handles its degenerate limit as a step function: zero scale
    collapses the Gaussian transitions onto their conditional mean, and
    ``n == 0`` (or ``nu == 0``) makes the jump size a point mass at 0.
    """

    poisson_pmf: Callable
    variance_cdf: Callable   # P(v_t <= v | v_prev, j_v)
    jump_cdf: Callable       # P(J <= j | n)
    intensity_cdf: Callable  # P(lam_t <= lam | lam_prev)


def transition_densities(params: ModelParams) -> TransitionLaws:
    """Bind the latent transition laws for one parameter set."""
    p = params

    def _pois(n, lam_prev):
        return poisson_pmf(n, lam_prev, p.h)

    def _variance_cdf(v, v_prev, j_v=0.0):
        v_prev = np.asarray(v_prev, float)
        mean = v_prev + p.kappa * (p.theta - v_prev) * p.h \
            + np.asarray(j_v, float)
        scale = p.sigma * np.sqrt(v_prev * p.h)
        return _gaussian_or_step_cdf(v, mean, scale)

    def _jump_cdf(j, n):
        j = np.asarray(j, float)
        n = np.asarray(n)
        if p.nu == 0.0:
            out = (j >= 0.0).astype(float)
            broad = np.broadcast_arrays(out, np.zeros(np.shape(n)))[0]
            return float(broad) if broad.ndim == 0 else broad
        # Sum of n iid Exp(nu) sizes: Gamma(shape n, scale nu); n == 0 is a
        # point mass at 0.
        out = np.where(n == 0, (j >= 0.0).astype(float),
                       stats.gamma.cdf(j, a=np.maximum(n, 1), scale=p.nu))
        return float(out) if out.ndim == 0 else out

    def _intensity_cdf(lam, lam_prev):
        lam_prev = np.asarray(lam_prev, float)
        mean = lam_prev + p.chi * (p.omega - lam_prev) * p.h
        scale = p.xi * np.sqrt(lam_prev * p.h)
        return _gaussian_or_step_cdf(lam, mean, scale)

    return TransitionLaws(_pois, _variance_cdf, _jump_cdf, _intensity_cdf)


def _gaussian_or_step_cdf(x, mean, scale):
    """N(mean, scale^2) cdf, degenerating to a step when scale == 0."""
    x, mean, scale = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(mean, float),
        np.asarray(scale, float))
    out = np.empty(x.shape, dtype=float)
    deg = scale == 0.0
    if np.any(deg):
        out[deg] = (x[deg] >= mean[deg]).astype(float)
    if np.any(~deg):
        out[~deg] = ndtr((x[~deg] - mean[~deg]) / scale[~deg])
    if out.ndim == 0:
        return float(out)
    return out
