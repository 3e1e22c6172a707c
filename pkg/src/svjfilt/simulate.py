"""Euler path simulation and a Monte-Carlo likelihood oracle.

Simulation uses full truncation: a negative variance or intensity proposed
by the Euler step is floored at zero before it is stored or enters any
square root.  The likelihood oracle floors its latent paths at the one-step
rebound level instead (see :func:`svjfilt.models.state_floors`) and weights
each step by the return density conditional on the floored state pair,
matching the regularized model the grid and particle filters evaluate; a
zero state would make the return density degenerate.  Return jumps are
coupled per jump: each variance jump size ``z_v(i) ~ Exp(nu)`` gets its own
return jump ``z_y(i) ~ N(alpha + rho_z z_v(i), delta^2)``.

Reproducibility contract: a run is a pure function of ``seed``.  The oracle
splits paths into fixed-size chunks, one spawned child stream per chunk
(``numpy.random.SeedSequence``), so results do not depend on how chunks are
scheduled; changing ``chunk_size`` changes the draws.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from .densities import measurement_logpdf
from .models import ModelParams, compensator, state_floors, \
    stationary_moments


@dataclass(frozen=True)
class SimulatedPath:
    """One simulated path; states include the initial value (length T+1)."""

    y: np.ndarray        # (T,) log returns
    v: np.ndarray        # (T+1,) variance, nonnegative
    lam: np.ndarray      # (T+1,) jump intensity, nonnegative
    n: np.ndarray        # (T,) jump counts
    j_y: np.ndarray      # (T,) aggregate return jumps
    j_v: np.ndarray      # (T,) aggregate variance jumps
    eps_v: np.ndarray    # (T,) variance diffusion shocks as drawn
    eps_lam: np.ndarray  # (T,) intensity diffusion shocks as drawn
    seed: Optional[int] = None

    def __post_init__(self):
        t = len(self.y)
        if len(self.v) != t + 1 or len(self.lam) != t + 1:
            raise ValueError("state arrays must have length T+1")
        if np.any(self.v < 0.0) or np.any(self.lam < 0.0):
            raise ValueError("truncated states must be nonnegative")
        for arr in (self.y, self.v, self.lam, self.j_y, self.j_v,
                    self.eps_v, self.eps_lam):
            if not np.all(np.isfinite(arr)):
                raise ValueError("simulated arrays must be finite")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _draw_jumps(params: ModelParams, lam: np.ndarray, rng):
    """Jump count and aggregate sizes for one step, per-jump coupling.

    Draw order per step: Poisson counts, Exp variance jump sizes (flat, in
    path order), then the Gaussian return jump noise for the same flat
    layout.
    """
    p = params
    size = lam.shape
    if not p.jumps_active:
        zeros = np.zeros(size)
        return np.zeros(size, dtype=np.int64), zeros, zeros
    n = rng.poisson(lam * p.h)
    total = int(n.sum())
    if total == 0:
        zeros = np.zeros(size)
        return n, zeros, zeros
    owner = np.repeat(np.arange(n.size), n.ravel())
    z_v = rng.exponential(p.nu, total) if p.nu > 0.0 else np.zeros(total)
    z_y = p.alpha + p.rho_z * z_v + p.delta * rng.standard_normal(total)
    j_v = np.bincount(owner, weights=z_v, minlength=n.size).reshape(size)
    j_y = np.bincount(owner, weights=z_y, minlength=n.size).reshape(size)
    return n, j_y, j_v


def _step(params: ModelParams, v: np.ndarray, lam: np.ndarray, rng):
    """Advance every path one step; returns draws and the next state."""
    p = params
    n, j_y, j_v = _draw_jumps(p, lam, rng)
    eps_v = rng.standard_normal(v.shape)
    if p.intensity_stochastic:
        eps_lam = rng.standard_normal(v.shape)
    else:
        eps_lam = np.zeros(v.shape)
    eps_perp = rng.standard_normal(v.shape)

    sq_vh = np.sqrt(v * p.h)
    coef_perp = math.sqrt(1.0 - p.rho_v ** 2 - p.rho_lam ** 2)
    abar = compensator(p)
    y = (p.mu - 0.5 * v - abar * lam) * p.h \
        + sq_vh * (coef_perp * eps_perp + p.rho_v * eps_v
                   + p.rho_lam * eps_lam) + j_y
    v_next = np.maximum(
        v + p.kappa * (p.theta - v) * p.h + p.sigma * sq_vh * eps_v + j_v,
        0.0)
    if p.intensity_stochastic:
        lam_next = np.maximum(
            lam + p.chi * (p.omega - lam) * p.h
            + p.xi * np.sqrt(lam * p.h) * eps_lam, 0.0)
    elif p.jumps_active:
        lam_next = lam + p.chi * (p.omega - lam) * p.h
    else:
        lam_next = lam
    return y, v_next, lam_next, n, j_y, j_v, eps_v, eps_lam


def simulate(params: ModelParams, T: int, init: Optional[Tuple] = None,
             seed=None) -> SimulatedPath:
    """Simulate one path of ``T`` returns.

    Parameters
    ----------
    params : ModelParams
    T : int
        Number of returns.
    init : (v0, lam0), optional
        Initial state; defaults to the long-run means ``(theta, omega)``.
    seed : int, Generator, or None
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = _as_rng(seed)
    p = params
    if init is None:
        v0, lam0 = p.theta, p.omega
    else:
        v0, lam0 = float(init[0]), float(init[1])
    if v0 < 0.0 or lam0 < 0.0:
        raise ValueError("initial state must be nonnegative")

    v = np.empty(T + 1)
    lam = np.empty(T + 1)
    v[0], lam[0] = v0, lam0
    y = np.empty(T)
    n = np.empty(T, dtype=np.int64)
    j_y = np.empty(T)
    j_v = np.empty(T)
    eps_v = np.empty(T)
    eps_lam = np.empty(T)
    state_v = np.array([v0])
    state_l = np.array([lam0])
    for t in range(T):
        out = _step(p, state_v, state_l, rng)
        y[t] = out[0][0]
        state_v, state_l = out[1], out[2]
        v[t + 1], lam[t + 1] = state_v[0], state_l[0]
        n[t], j_y[t], j_v[t] = out[3][0], out[4][0], out[5][0]
        eps_v[t], eps_lam[t] = out[6][0], out[7][0]
    seed_val = seed if isinstance(seed, int) else None
    return SimulatedPath(y=y, v=v, lam=lam, n=n, j_y=j_y, j_v=j_v,
                         eps_v=eps_v, eps_lam=eps_lam, seed=seed_val)


def sample_stationary_state(params: ModelParams, size: int, rng):
    """Draw (v0, lam0) from the stationary Gamma laws.

    The square-root process is stationary Gamma with shape
    ``2 kappa theta / sigma^2`` and scale ``sigma^2 / (2 kappa)``; same
    shape for the intensity.  Degenerate dimensions return constants.
    """
    p = params
    mom = stationary_moments(p)
    if mom.var_v > 0.0:
        shape = 2.0 * p.kappa * p.theta / p.sigma ** 2
        scale = p.sigma ** 2 / (2.0 * p.kappa)
        v0 = rng.gamma(shape, scale, size)
    else:
        v0 = np.full(size, p.theta)
    if p.intensity_stochastic and mom.var_lam > 0.0:
        shape = 2.0 * p.chi * p.omega / p.xi ** 2
        scale = p.xi ** 2 / (2.0 * p.chi)
        lam0 = rng.gamma(shape, scale, size)
    else:
        lam0 = np.full(size, mom.e_lam)
    return v0, lam0


def mc_likelihood_oracle(params: ModelParams, y: np.ndarray, n_paths: int,
                         seed=None, chunk_size: int = 250_000):
    """Brute-force likelihood estimate by averaging over latent paths.

    Simulates ``n_paths`` latent paths from the stationary initial law and
    averages the product over time of the conditional return densities
    given the realized transitions.  Returns ``(loglik, se)`` where ``se``
    is the delta-method standard error of the log likelihood.  Warns when
    the relative standard error of the likelihood mean exceeds 1%.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a nonempty 1-d array")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    p = params
    T = len(y)
    n_chunks = (n_paths + chunk_size - 1) // chunk_size
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    v_floor, lam_floor = state_floors(p)

    logl_parts = []
    for k in range(n_chunks):
        size = min(chunk_size, n_paths - k * chunk_size)
        rng = np.random.Generator(np.random.PCG64(children[k]))
        v, lam = sample_stationary_state(p, size, rng)
        v = np.maximum(v, v_floor)
        if p.intensity_stochastic:
            lam = np.maximum(lam, lam_floor)
        logl = np.zeros(size)
        for t in range(T):
            _, v_raw, lam_raw, n, _, j_v, _, _ = _step(p, v, lam, rng)
            v_next = np.maximum(v_raw, v_floor)
            lam_next = np.maximum(lam_raw, lam_floor) \
                if p.intensity_stochastic else lam_raw
            logl += measurement_logpdf(
                y[t], v_next, v, lam_next, lam, j_v, n, p)
            v, lam = v_next, lam_next
        logl_parts.append(logl)
    logl_all = np.concatenate(logl_parts)

    top = float(np.max(logl_all))
    if not np.isfinite(top):
        raise ArithmeticError("every simulated path has zero likelihood")
    w = np.exp(logl_all - top)
    mean_w = float(np.mean(w))
    rel_se = float(np.std(w, ddof=1) / (mean_w * math.sqrt(n_paths)))
    loglik = float(logsumexp(logl_all) - math.log(n_paths))
    if rel_se > 0.01:
        warnings.warn(
            f"oracle relative standard error {rel_se:.3%} exceeds 1%; "
            f"increase n_paths", RuntimeWarning, stacklevel=2)
    return loglik, rel_se
