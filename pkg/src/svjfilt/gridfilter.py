"""Deterministic grid filter: exact prediction-update on a fixed state grid.

The filter approximates the likelihood recursion by quadrature: the
posterior over (v, lam) lives on the node set, transitions become interval
probabilities (cdf differences of the conditional laws), and the one-step
predictive density of the return is a finite sum over all node
combinations and jump counts up to ``r_max``.

All transition caches are independent of the data, so they are built once
per (params, grid) pair; each step only re-evaluates the Gaussian return
factor.  Likelihood evaluation is bit-deterministic: same inputs, same
bits, regardless of run or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import stats
from scipy.special import ndtr

from . import _kernels
from .errors import GridError, ZeroLikelihoodError
from .grids import GridSpec, StateGrid, build_grid, default_grid_spec
from .models import ModelParams, compensator
from .simulate import SimulatedPath

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class PosteriorGrid:
    """Posterior mass over (v, lam) nodes; sums to 1."""

    mass: np.ndarray  # (n_v, n_lam)
    grid: StateGrid = field(repr=False)

    def __post_init__(self):
        expected = (len(self.grid.v_nodes), len(self.grid.lam_nodes))
        if self.mass.shape != expected:
            raise ValueError(
                f"mass shape {self.mass.shape} != grid shape {expected}")
        if np.any(self.mass < 0.0):
            raise ValueError("posterior mass must be nonnegative")
        total = float(np.sum(self.mass))
        if not math.isfinite(total) or abs(total - 1.0) > 1e-10:
            raise ValueError(f"posterior mass must sum to 1, got {total!r}")

    def mean_v(self) -> float:
        return float(np.sum(self.grid.v_nodes * np.sum(self.mass, axis=1)))

    def mean_lam(self) -> float:
        return float(np.sum(self.grid.lam_nodes * np.sum(self.mass, axis=0)))


@dataclass(frozen=True)
class FilterOutput:
    """Per-step likelihood contributions and filtered state summaries."""

    loglik_contribs: np.ndarray   # (T,) log predictive densities
    total_loglik: float           # sum of contribs, same summation order
    filtered_v: np.ndarray        # (T,) posterior mean variance
    filtered_lam: np.ndarray      # (T,) posterior mean intensity
    filtered_jump_prob: np.ndarray  # (T,) posterior P(n_t >= 1)
    filtered_j_y: np.ndarray      # (T,) posterior mean return jump
    filtered_j_v: np.ndarray      # (T,) posterior mean variance jump


@dataclass(frozen=True)
class _StepCache:
    """Data-independent kernel inputs for one (params, grid) pair."""

    qv: np.ndarray        # (n_v, n_j, n_v) interval probs of the v move
    vbar: np.ndarray      # (n_v, n_j, n_v) within-cell v-move mean
    vvar: np.ndarray      # (n_v, n_j, n_v) within-cell v-move variance
    alo: np.ndarray       # (n_v, n_j) first nonzero qv index
    ahi: np.ndarray       # (n_v, n_j) last nonzero qv index
    qj: np.ndarray        # (n_j, r+1) interval probs of the jump size
    qlam: np.ndarray      # (n_lam, n_lam) interval probs of the lam move
    pois: np.ndarray      # (r+1,) or (r+1, n_lam) truncated Poisson probs
    s2t: np.ndarray       # (n_v, r+1) return variance at the nodes
    ndelta2: np.ndarray   # (r+1,) jump-count noise variance n delta^2
    cmean: np.ndarray     # (n_v[, n_lam], r+1) return mean constant
    sbe: np.ndarray       # (n_v, n_lam) intensity coupling coefficient
    lam_cell_mean: np.ndarray  # (n_lam, n_lam) within-cell move mean [d, e]
    lam_cell_var: np.ndarray   # (n_lam, n_lam) within-cell move var [d, e]
    blocks: np.ndarray    # fixed a-partition for the collapsed kernel


@dataclass(frozen=True)
class PreparedFilter:
    """Grid, caches, and initial posterior, ready to filter any series."""

    params: ModelParams
    grid: StateGrid
    cache: _StepCache = field(repr=False)
    u0: np.ndarray = field(repr=False)


def initial_posterior(params: ModelParams, grid: StateGrid) -> np.ndarray:
    """Cell-integrated stationary law as the time-0 posterior.

    The stationary Gamma laws of v (and lam, when stochastic) are
    integrated over the grid cells and renormalized.  Degenerate dimensions
    put unit mass on the cell containing the long-run level.
    """
    p = params
    shape_v = 2.0 * p.kappa * p.theta / p.sigma ** 2
    scale_v = p.sigma ** 2 / (2.0 * p.kappa)
    gv = np.diff(stats.gamma.cdf(grid.v_edges, a=shape_v, scale=scale_v))
    gv = np.clip(gv, 0.0, None)
    if gv.sum() <= 0.0:
        raise GridError("stationary variance law has no mass on the grid")

    m = len(grid.lam_nodes)
    if p.intensity_stochastic and p.xi > 0.0:
        shape_l = 2.0 * p.chi * p.omega / p.xi ** 2
        scale_l = p.xi ** 2 / (2.0 * p.chi)
        gl = np.diff(stats.gamma.cdf(grid.lam_edges, a=shape_l,
                                     scale=scale_l))
        gl = np.clip(gl, 0.0, None)
        if gl.sum() <= 0.0:
            raise GridError("stationary intensity law has no mass on grid")
    else:
        gl = np.zeros(m)
        idx = np.searchsorted(grid.lam_edges, p.omega, side="right") - 1
        gl[min(max(idx, 0), m - 1)] = 1.0

    u0 = np.outer(gv, gl)
    return u0 / np.sum(u0)


def _point_mass_row(edges: np.ndarray, x: float) -> np.ndarray:
    row = np.zeros(len(edges) - 1)
    idx = np.searchsorted(edges, x, side="right") - 1
    row[min(max(idx, 0), len(row) - 1)] = 1.0
    return row


def _poisson_pmf_matrix(r_max: int, means: np.ndarray) -> np.ndarray:
    """pmf(n; m) for n = 0..r_max, columns per mean; exact at m == 0."""
    ns = np.arange(r_max + 1)
    out = stats.poisson.pmf(ns[:, None], means[None, :])
    zero = means == 0.0
    if np.any(zero):
        out[:, zero] = 0.0
        out[0, zero] = 1.0
    return out


def _cell_moments(z, cdf, mean, scale, nodes):
    """Cell masses and within-cell conditional moments of a normal move.

    Cells live on the last axis; `z` and `cdf` are evaluated at the cell
    edges, and `cdf[..., 0]` must already be 0 so the bottom cell absorbs
    the truncated below-zero mass (its lower limit is -inf).  `mean` and
    `scale` must broadcast against the cell-indexed result.  Cells with
    negligible mass fall back to the node as representative point: the
    kernels weight them by their mass anyway.  The mean is clamped at the
    bottom node because sub-floor draws land there, and cancellation can
    leave the variance a hair negative, so it is clipped at zero.
    """
    pdf = np.zeros_like(z)
    zpdf = np.zeros_like(z)
    fin = np.isfinite(z)
    pdf[fin] = np.exp(-0.5 * z[fin] ** 2) / _SQRT_2PI
    zpdf[fin] = z[fin] * pdf[fin]
    pdf[..., 0] = 0.0
    zpdf[..., 0] = 0.0
    q = np.diff(cdf, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = -np.diff(pdf, axis=-1) / q
        cell_mean = mean[..., None] + scale[..., None] * ratio
        cell_var = scale[..., None] ** 2 \
            * (1.0 - np.diff(zpdf, axis=-1) / q - ratio ** 2)
    tiny = ~(q > 1e-12)
    cell_mean = np.where(tiny, np.broadcast_to(nodes, q.shape), cell_mean)
    cell_var = np.where(tiny, 0.0, cell_var)
    return q, np.maximum(cell_mean, nodes[0]), np.clip(cell_var, 0.0, None)


def _build_cache(params: ModelParams, grid: StateGrid) -> _StepCache:
    p = params
    v = grid.v_nodes
    lam = grid.lam_nodes
    j = grid.j_nodes
    n_v, n_lam, n_j = len(v), len(lam), len(j)
    r_max = grid.spec.r_max if p.jumps_active else 0
    n_r = r_max + 1

    # Variance transition: N(v_b + kappa (theta - v_b) h + j_c, sigma^2 v_b h)
    # integrated over cells; v_b >= the grid floor keeps the scale positive.
    # Full truncation maps below-zero draws to 0, so the bottom cell
    # integrates from -inf: dropping that mass would leak probability on
    # near-absorbed paths.
    mean_v = v[:, None] + p.kappa * (p.theta - v[:, None]) * p.h + j[None, :]
    scale_v = p.sigma * np.sqrt(v * p.h)
    zed = (grid.v_edges[None, None, :] - mean_v[:, :, None]) \
        / scale_v[:, None, None]
    cdf_v = ndtr(zed)
    cdf_v[:, :, 0] = 0.0
    qv, vbar, vvar = _cell_moments(zed, cdf_v, mean_v, scale_v[:, None], v)
    qv = np.ascontiguousarray(qv)
    vbar = np.ascontiguousarray(vbar)
    vvar = np.ascontiguousarray(vvar)
    mask = qv > 0.0
    has_any = mask.any(axis=2)
    alo = mask.argmax(axis=2).astype(np.int64)
    ahi = (n_v - 1 - mask[:, :, ::-1].argmax(axis=2)).astype(np.int64)
    alo[~has_any] = 0
    ahi[~has_any] = -1

    # Jump-size transition: Gamma(n, nu) over cells, point mass at 0 when
    # n == 0 or nu == 0.
    qj = np.zeros((n_j, n_r))
    qj[:, 0] = _point_mass_row(grid.j_edges, 0.0)
    for n in range(1, n_r):
        if p.nu > 0.0:
            cdf = stats.gamma.cdf(grid.j_edges, a=n, scale=p.nu)
            qj[:, n] = np.diff(cdf)
        else:
            qj[:, n] = qj[:, 0]

    # Intensity transition and Poisson counts.
    if p.intensity_stochastic and p.xi > 0.0:
        mean_l = lam + p.chi * (p.omega - lam) * p.h
        scale_l = p.xi * np.sqrt(lam * p.h)
        zl = (grid.lam_edges[None, :] - mean_l[:, None]) / scale_l[:, None]
        cdf_l = ndtr(zl)
        cdf_l[:, 0] = 0.0
        q_ed, mean_ed, var_ed = _cell_moments(zl, cdf_l, mean_l,
                                              scale_l, lam)
        qlam = np.ascontiguousarray(q_ed.T)
        lam_cell_mean = np.ascontiguousarray(mean_ed.T)
        lam_cell_var = np.ascontiguousarray(var_ed.T)
        pois = np.ascontiguousarray(_poisson_pmf_matrix(r_max, lam * p.h))
    elif p.intensity_stochastic:
        # Degenerate (xi == 0): deterministic move to the drift target.
        qlam = np.zeros((n_lam, n_lam))
        for e in range(n_lam):
            target = lam[e] + p.chi * (p.omega - lam[e]) * p.h
            qlam[:, e] = _point_mass_row(grid.lam_edges, target)
        pois = np.ascontiguousarray(_poisson_pmf_matrix(r_max, lam * p.h))
        lam_cell_mean = np.ascontiguousarray(
            np.broadcast_to(lam[:, None], (n_lam, n_lam)))
        lam_cell_var = np.zeros((n_lam, n_lam))
    else:
        qlam = np.ones((1, 1))
        mean_n = lam[0] * p.h if p.jumps_active else 0.0
        pois = _poisson_pmf_matrix(r_max, np.array([mean_n]))[:, 0]
        lam_cell_mean = np.zeros((0, 0))
        lam_cell_var = np.zeros((0, 0))

    # Gaussian return factor.  With pv = rho_v / sigma, m_e the intensity
    # drift target, and vbar / lbar the landing-cell conditional means,
    #   mean = C[b(, e), n] + pv vbar[b, c, a] + S[b, e] lbar[d, e]
    #          + (rho_z - pv) j_c
    #   C = (mu - v_b/2 - abar lam_e) h - pv (v_b + kappa (theta - v_b) h)
    #       - S[b, e] m_e + alpha n
    #   S = (rho_lam / xi) sqrt(v_b / lam_e)      (0 when xi == 0)
    #   var = v_b (1 - rho_v^2 - rho_lam^2) h + n delta^2
    #         + pv^2 vvar[b, c, a] + S[b, e]^2 lam_cell_var[d, e].
    # The kernels standardize inside the loop because the variance depends
    # on the landing cells.
    ns = np.arange(n_r, dtype=float)
    abar = compensator(p)
    pv = p.rho_v / p.sigma
    var_t = v[:, None] * (1.0 - p.rho_v ** 2 - p.rho_lam ** 2) * p.h \
        + ns[None, :] * p.delta ** 2
    ndelta2 = ns * p.delta ** 2

    drift_b = pv * (v + p.kappa * (p.theta - v) * p.h)
    if p.intensity_stochastic:
        if p.xi > 0.0 and p.rho_lam != 0.0:
            s_be = (p.rho_lam / p.xi) * np.sqrt(v[:, None] / lam[None, :])
        else:
            s_be = np.zeros((n_v, n_lam))
        m_e = lam + p.chi * (p.omega - lam) * p.h
        c_ben = ((p.mu - 0.5 * v[:, None] - abar * lam[None, :]) * p.h
                 - drift_b[:, None] - s_be * m_e[None, :])
        cmean = np.ascontiguousarray(
            c_ben[:, :, None] + p.alpha * ns[None, None, :])
    else:
        lam_bar = lam[0]
        c_bn = (p.mu - 0.5 * v - abar * lam_bar) * p.h - drift_b
        cmean = np.ascontiguousarray(c_bn[:, None] + p.alpha * ns[None, :])
        s_be = np.zeros((0, 0))

    bounds = np.linspace(0, n_v, _kernels.N_BLOCKS + 1).astype(np.int64)
    return _StepCache(qv=qv, vbar=vbar, vvar=vvar, alo=alo, ahi=ahi,
                      qj=qj, qlam=qlam, pois=pois,
                      s2t=var_t, ndelta2=ndelta2, cmean=cmean, sbe=s_be,
                      lam_cell_mean=lam_cell_mean,
                      lam_cell_var=lam_cell_var, blocks=bounds)


def prepare_filter(params: ModelParams,
                   spec: Optional[GridSpec] = None) -> PreparedFilter:
    """Build the grid, transition caches, and initial posterior."""
    if spec is None:
        spec = default_grid_spec(params)
    grid = build_grid(params, spec)
    cache = _build_cache(params, grid)
    u0 = initial_posterior(params, grid)
    return PreparedFilter(params=params, grid=grid, cache=cache, u0=u0)


def _step_arrays(prep: PreparedFilter, u: np.ndarray, y_t: float):
    """Run one kernel step; returns (contrib, u_next, jump stats)."""
    p = prep.params
    c = prep.cache
    g = prep.grid
    pv = p.rho_v / p.sigma
    if p.intensity_stochastic:
        w2, sn, sjv, sjy = _kernels.step_stochastic_intensity(
            y_t, u, g.j_nodes,
            c.qv, c.vbar, c.vvar, c.alo, c.ahi, c.qj, c.qlam, c.pois,
            c.s2t, c.cmean, c.sbe, c.lam_cell_mean, c.lam_cell_var,
            c.ndelta2, pv, p.rho_z - pv, p.alpha, p.rho_z)
        contrib = float(np.sum(w2))
        w_next = w2.T
        marg_v = np.sum(w2, axis=0)
        marg_l = np.sum(w2, axis=1)
    else:
        w, sn, sjv, sjy = _kernels.step_const_intensity(
            y_t, u[:, 0], g.j_nodes,
            c.qv, c.vbar, c.vvar, c.alo, c.ahi, c.qj, c.pois,
            c.s2t, c.cmean, c.ndelta2, pv, p.rho_z - pv,
            p.alpha, p.rho_z, c.blocks)
        contrib = float(np.sum(w))
        w_next = w[:, None]
        marg_v = w
        marg_l = np.array([contrib])
    jump_mass = float(np.sum(sn[:, 1:])) if sn.shape[1] > 1 else 0.0
    return contrib, w_next, marg_v, marg_l, jump_mass, \
        float(np.sum(sjv)), float(np.sum(sjy))


def likelihood_step(prep: PreparedFilter,
                    u_prev: Union[PosteriorGrid, np.ndarray], y_t: float,
                    t: int = 0):
    """Advance the posterior one observation.

    Returns ``(contrib, u_next)`` where ``contrib`` is the predictive
    density of ``y_t`` and ``u_next`` the updated :class:`PosteriorGrid`.
    Raises :class:`ZeroLikelihoodError` when the predictive density
    underflows to zero or is not finite.
    """
    mass = u_prev.mass if isinstance(u_prev, PosteriorGrid) else u_prev
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    contrib, w_next, *_ = _step_arrays(prep, mass, float(y_t))
    if not (contrib > 0.0 and math.isfinite(contrib)):
        raise ZeroLikelihoodError(t, y_t)
    post = PosteriorGrid(mass=np.ascontiguousarray(w_next) / contrib,
                         grid=prep.grid)
    return contrib, post


def filter_prepared(prep: PreparedFilter, y: np.ndarray) -> FilterOutput:
    """Filter a return series with prebuilt caches.

    Performs exactly the same kernel calls as iterating
    :func:`likelihood_step`, so the two routes agree bit for bit.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) == 0:
        raise ValueError("y must be a nonempty 1-d array")
    T = len(y)
    g = prep.grid
    contribs = np.empty(T)
    f_v = np.empty(T)
    f_l = np.empty(T)
    f_jp = np.empty(T)
    f_jy = np.empty(T)
    f_jv = np.empty(T)
    u = prep.u0
    for t in range(T):
        contrib, w_next, marg_v, marg_l, jmass, sjv, sjy = \
            _step_arrays(prep, u, float(y[t]))
        if not (contrib > 0.0 and math.isfinite(contrib)):
            raise ZeroLikelihoodError(t, y[t])
        contribs[t] = math.log(contrib)
        f_v[t] = float(np.sum(g.v_nodes * marg_v)) / contrib
        f_l[t] = float(np.sum(g.lam_nodes * marg_l)) / contrib
        f_jp[t] = jmass / contrib
        f_jv[t] = sjv / contrib
        f_jy[t] = sjy / contrib
        u = np.ascontiguousarray(w_next) / contrib
    return FilterOutput(
        loglik_contribs=contribs, total_loglik=float(np.sum(contribs)),
        filtered_v=f_v, filtered_lam=f_l, filtered_jump_prob=f_jp,
        filtered_j_y=f_jy, filtered_j_v=f_jv)


def run_filter(params: ModelParams, y, spec: Optional[GridSpec] = None
               ) -> FilterOutput:
    """Build the grid for ``params`` and filter the series ``y``."""
    if isinstance(y, SimulatedPath):
        y = y.y
    return filter_prepared(prepare_filter(params, spec), y)
