"""Numba step kernels for the grid filter.

One step evaluates

    W[a(,d)] = sum over (n, b, c(, e)) of
        r(y | cell a, v_b, cell d, lam_e, j_c, n)
        * P(n | lam_e) * Qv[a | b, c] * Qj[c | n] * Qlam[d | e] * u[b(, e)]

where r is Gaussian in y.  Landing cells act as their conditional laws,
not as point masses at their nodes: the within-cell conditional mean of
the move enters the return mean and the within-cell variance widens the
return variance (for the variance dimension through pv = rho_v / sigma,
for the intensity dimension through the coupling coefficient).  Affordable
grids are coarser than the one-step conditional scales, so a
node-as-point-mass reading would quantize the return mean at the cell
width and bias the likelihood.

Determinism contract: the result is a pure function of the inputs,
bit-identical across runs and thread counts.  This holds because each
parallel iteration owns a disjoint slice of every output (a fixed block of
`a` slots, or one `d` column) and accumulates serially in a fixed index
order; the partition never depends on the thread count.

Two exact skips keep the inner loop cheap without changing any bits:
terms whose interval probability is exactly 0.0, and terms whose Gaussian
factor underflows to exactly 0.0 (z*z >= 1492 implies exp(-z*z/2) == 0.0
in IEEE double).  Skipping an exact zero leaves every accumulator bitwise
unchanged.
"""

import math

import numpy as np
from numba import njit, prange

# Fixed number of output blocks for the constant-intensity kernel; part of
# the determinism contract (must not depend on the thread count).
N_BLOCKS = 8

_UNDERFLOW_Z2 = 1492.0
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True, parallel=True)
def step_const_intensity(y, u, j_nodes, qv, vbar, vvar, alo, ahi, qj, pois,
                         s2t, cmean, ndelta2, pv, rzmpv, alpha, rho_z,
                         blocks):
    """One filter step with the intensity dimension collapsed (M == 1).

    `cmean[b, n]` is the unstandardized return-mean constant, `s2t[b, n]`
    the return variance at the nodes, and `vbar` / `vvar` the within-cell
    conditional moments of the variance move (same shape as `qv`).
    Returns (w, sn, sjv, sjy): the unnormalized posterior over v_t and the
    per-block partial sums for jump statistics.
    """
    n_v = qv.shape[0]
    n_j = j_nodes.shape[0]
    n_r = pois.shape[0]
    n_blk = blocks.shape[0] - 1
    pv2 = pv * pv

    w = np.zeros(n_v)
    sn = np.zeros((n_blk, n_r))
    sjv = np.zeros(n_blk)
    sjy = np.zeros(n_blk)

    for blk in prange(n_blk):
        a_start = blocks[blk]
        a_stop = blocks[blk + 1]
        for n in range(n_r):
            pn = pois[n]
            if pn == 0.0:
                continue
            nd2 = ndelta2[n]
            for b in range(n_v):
                ub = u[b]
                if ub == 0.0:
                    continue
                g0 = pn * ub
                s2b = s2t[b, n]
                num0 = y - cmean[b, n]
                for c in range(n_j):
                    g = g0 * qj[c, n]
                    if g == 0.0:
                        continue
                    jc = j_nodes[c]
                    num1 = num0 - rzmpv * jc
                    mj = alpha * n + rho_z * jc
                    lo = alo[b, c]
                    hi = ahi[b, c]
                    if lo < a_start:
                        lo = a_start
                    if hi >= a_stop:
                        hi = a_stop - 1
                    for a in range(lo, hi + 1):
                        q = qv[b, c, a]
                        if q == 0.0:
                            continue
                        s_inv = 1.0 / np.sqrt(s2b + pv2 * vvar[b, c, a])
                        z = (num1 - pv * vbar[b, c, a]) * s_inv
                        z2 = z * z
                        if z2 >= _UNDERFLOW_Z2:
                            continue
                        term = np.exp(-0.5 * z2) * s_inv * _INV_SQRT_2PI \
                            * q * g
                        w[a] += term
                        sn[blk, n] += term
                        sjv[blk] += term * jc
                        sjy[blk] += term * (mj + nd2 * s_inv * z)
    return w, sn, sjv, sjy


@njit(cache=True, parallel=True)
def step_stochastic_intensity(y, u, j_nodes, qv, vbar, vvar, alo, ahi,
                              qj, qlam, pois, s2t, cmean, sbe,
                              lam_cell_mean, lam_cell_var,
                              ndelta2, pv, rzmpv, alpha, rho_z):
    """One filter step with a stochastic intensity dimension.

    `u` has shape (n_v, n_lam) indexed [b, e]; the output `w2` has shape
    (n_lam, n_v) indexed [d, a] (transposed for thread-disjoint rows).
    `cmean[b, e, n]` is the unstandardized return-mean constant and
    `sbe[b, e]` the coupling coefficient on the landed intensity; the
    within-cell moments of both landing cells enter the return mean and
    variance as in the collapsed kernel.
    """
    n_v = qv.shape[0]
    n_lam = qlam.shape[0]
    n_j = j_nodes.shape[0]
    n_r = pois.shape[0]
    pv2 = pv * pv

    w2 = np.zeros((n_lam, n_v))
    sn = np.zeros((n_lam, n_r))
    sjv = np.zeros(n_lam)
    sjy = np.zeros(n_lam)

    for d in prange(n_lam):
        for e in range(n_lam):
            qde = qlam[d, e]
            if qde == 0.0:
                continue
            lb = lam_cell_mean[d, e]
            lv = lam_cell_var[d, e]
            for n in range(n_r):
                pne = pois[n, e]
                if pne == 0.0:
                    continue
                g1 = qde * pne
                nd2 = ndelta2[n]
                for b in range(n_v):
                    ub = u[b, e]
                    if ub == 0.0:
                        continue
                    g0 = g1 * ub
                    sb = sbe[b, e]
                    s2b = s2t[b, n] + sb * sb * lv
                    num0 = y - cmean[b, e, n] - sb * lb
                    for c in range(n_j):
                        g = g0 * qj[c, n]
                        if g == 0.0:
                            continue
                        jc = j_nodes[c]
                        num1 = num0 - rzmpv * jc
                        mj = alpha * n + rho_z * jc
                        for a in range(alo[b, c], ahi[b, c] + 1):
                            q = qv[b, c, a]
                            if q == 0.0:
                                continue
                            s_inv = 1.0 / np.sqrt(s2b
                                                  + pv2 * vvar[b, c, a])
                            z = (num1 - pv * vbar[b, c, a]) * s_inv
                            z2 = z * z
                            if z2 >= _UNDERFLOW_Z2:
                                continue
                            term = np.exp(-0.5 * z2) * s_inv \
                                * _INV_SQRT_2PI * q * g
                            w2[d, a] += term
                            sn[d, n] += term
                            sjv[d] += term * jc
                            sjy[d] += term * (mj + nd2 * s_inv * z)
    return w2, sn, sjv, sjy
