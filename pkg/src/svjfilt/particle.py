"""Bootstrap particle filter with systematic resampling.

Particles carry (v, lam).  Each step propagates every particle through the
model dynamics, weights it by the conditional return density given the
realized state transition, records the mean weight as the likelihood
contribution, and resamples systematically so weights reset to uniform.

Particle states are floored at the one-step rebound level (see
:func:`svjfilt.models.state_floors`) rather than at zero, and the weights
condition on the floored states, not on the shocks that produced them: that
is exactly the conditional law the grid filter integrates, so the two
routes estimate one regularized likelihood.  Off the floor the two
conditionings coincide, because the state pair determines the shock.

Reproducibility: one RNG stream drives the whole cloud (chunk size equals
the particle count), so a run is a pure function of (params, y,
n_particles, seed).  Different seeds give different likelihood estimates;
that sampling noise is the quantity the deterministic filter removes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .densities import measurement_logpdf
from .errors import ParticleCollapseError
from .models import ModelParams, ModelVariant, state_floors
from .simulate import sample_stationary_state

DEFAULT_PARTICLES = {
    ModelVariant.SV: 100_000,
    ModelVariant.SVYJ: 250_000,
    ModelVariant.SVCJ: 1_000_000,
    ModelVariant.SVCJSI: 1_000_000,
}


@dataclass(frozen=True)
class ParticleCloud:
    """Particle states with normalized weights."""

    v: np.ndarray
    lam: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        n = len(self.v)
        if len(self.lam) != n or len(self.weights) != n:
            raise ValueError("cloud arrays must share one length")
        if np.any(self.v < 0.0) or np.any(self.lam < 0.0):
            raise ValueError("particle states must be nonnegative")
        if np.any(self.weights < 0.0) \
                or abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("weights must be normalized")


def resample_systematic(weights: np.ndarray, n_out: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: one uniform draw, stratified positions.

    Returns ``n_out`` ancestor indices.  Position k is
    ``(u + k) / n_out`` with a single ``u ~ U[0, 1)``, so a weight of
    ``m / n_out`` yields exactly ``m`` copies regardless of ``u``.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("weights must be a nonempty 1-d array")
    total = float(np.sum(w))
    if not (total > 0.0) or not math.isfinite(total):
        raise ValueError("weights must have a positive finite sum")
    positions = (rng.random() + np.arange(n_out)) / n_out
    cumulative = np.cumsum(w / total)
    idx = np.searchsorted(cumulative, positions, side="right")
    return np.minimum(idx, len(w) - 1)


def sir_likelihood(params: ModelParams, y: np.ndarray,
                   n_particles: Optional[int] = None, seed=None):
    """Likelihood estimate of a return series by particle filtering.

    Parameters
    ----------
    params : ModelParams
    y : array of returns
    n_particles : int, optional
        Defaults to the variant's reference budget
        (:data:`DEFAULT_PARTICLES`).
    seed : int, Generator, or None

    Returns
    -------
    (total_loglik, contribs)
        ``contribs[t]`` is the log of the mean particle weight at step t;
        ``total_loglik`` is their sum in the same order.

    Raises
    ------
    ParticleCollapseError
        If every particle weight underflows to zero at some step.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a nonempty 1-d array")
    p = params
    n_p = n_particles if n_particles is not None \
        else DEFAULT_PARTICLES[p.variant]
    if n_p < 2:
        raise ValueError("n_particles must be >= 2")
    rng = rng_from(seed)

    v_floor, lam_floor = state_floors(p)
    v, lam = sample_stationary_state(p, n_p, rng)
    v = np.maximum(v, v_floor)
    if p.intensity_stochastic:
        lam = np.maximum(lam, lam_floor)
    T = len(y)
    contribs = np.empty(T)
    log_np = math.log(n_p)
    for t in range(T):
        # Draw order per step: Poisson counts, Gamma jump sizes, variance
        # shock, intensity shock (stochastic intensity only).
        if p.jumps_active:
            n = rng.poisson(lam * p.h)
            j_v = nu_gamma(rng, n, p.nu)
        else:
            n = np.zeros(n_p, dtype=np.int64)
            j_v = np.zeros(n_p)
        eps_v = rng.standard_normal(n_p)
        if p.intensity_stochastic:
            eps_lam = rng.standard_normal(n_p)
        else:
            eps_lam = np.zeros(n_p)

        sq_vh = np.sqrt(v * p.h)
        v_next = np.maximum(
            v + p.kappa * (p.theta - v) * p.h + p.sigma * sq_vh * eps_v
            + j_v, v_floor)
        if p.intensity_stochastic:
            lam_next = np.maximum(
                lam + p.chi * (p.omega - lam) * p.h
                + p.xi * np.sqrt(lam * p.h) * eps_lam, lam_floor)
        elif p.jumps_active:
            lam_next = lam + p.chi * (p.omega - lam) * p.h
        else:
            lam_next = lam

        logw = measurement_logpdf(y[t], v_next, v, lam_next, lam, j_v, n, p)
        top = float(np.max(logw))
        if not math.isfinite(top):
            raise ParticleCollapseError(t, y[t])
        lse = float(logsumexp(logw))
        contribs[t] = lse - log_np

        weights = np.exp(logw - lse)
        idx = resample_systematic(weights, n_p, rng)
        v = v_next[idx]
        lam = lam_next[idx] if p.intensity_stochastic else lam_next
    return float(np.sum(contribs)), contribs


def nu_gamma(rng: np.random.Generator, n: np.ndarray, nu: float):
    """Aggregate of n iid Exp(nu) jump sizes: Gamma(n, nu), 0 at n == 0."""
    if nu == 0.0:
        return np.zeros(n.shape)
    return rng.standard_gamma(n) * nu


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
