"""Maximum-likelihood estimation on top of the grid filter.

Optimization runs in an unconstrained coordinate system: positive
parameters are log-transformed, correlations go through atanh, and the
(rho_v, rho_lam) pair uses polar coordinates so the joint constraint
rho_v**2 + rho_lam**2 < 1 maps to a single radial coordinate.  Standard
errors come from the outer product of per-observation score vectors
evaluated by central differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import GridError, ZeroLikelihoodError
from .gridfilter import filter_prepared, prepare_filter
from .grids import GridSpec, default_grid_spec
from .models import ModelParams, ModelVariant

_ATANH_CLIP = 1.0 - 1e-10
_LOG_FLOOR = 1e-12


def _atanh(x: float) -> float:
    return float(np.arctanh(np.clip(x, -_ATANH_CLIP, _ATANH_CLIP)))


def _log(x: float) -> float:
    return float(np.log(max(x, _LOG_FLOOR)))


@dataclass(frozen=True)
class ParamTransform:
    """Bijection between active model parameters and R^k.

    Attributes
    ----------
    variant : ModelVariant
        Model whose active parameter set defines the coordinates.
    names : tuple of str
        Active parameter names in canonical order.
    """

    variant: ModelVariant
    names: tuple

    @classmethod
    def for_variant(cls, variant: ModelVariant) -> "ParamTransform":
        from .models import ACTIVE_PARAMS

        return cls(variant=variant, names=ACTIVE_PARAMS[variant])

    @property
    def joint_correlation(self) -> bool:
        """Whether rho_v and rho_lam share the polar block."""
        return "rho_lam" in self.names

    def to_unconstrained(self, params: ModelParams) -> np.ndarray:
        """Map a parameter set to unconstrained coordinates."""
        vals = params.as_dict()
        out = []
        for name in self.names:
            x = vals[name]
            if name in ("kappa", "theta", "sigma", "chi", "omega", "xi",
                        "delta", "nu"):
                out.append(_log(x))
            elif name == "rho_v":
                if self.joint_correlation:
                    r = float(np.hypot(vals["rho_v"], vals["rho_lam"]))
                    out.append(_atanh(r))
                else:
                    out.append(_atanh(x))
            elif name == "rho_lam":
                out.append(float(np.arctan2(vals["rho_lam"], vals["rho_v"])))
            else:
                out.append(float(x))
        return np.asarray(out, dtype=np.float64)

    def to_params(self, u: np.ndarray, h: float) -> ModelParams:
        """Map unconstrained coordinates back to a parameter set."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (len(self.names),):
            raise ValueError(
                f"expected {len(self.names)} coordinates, got {u.shape}")
        kw = {}
        for name, x in zip(self.names, u):
            if name in ("kappa", "theta", "sigma", "chi", "omega", "xi",
                        "delta", "nu"):
                kw[name] = float(np.exp(x))
            elif name == "rho_v" and self.joint_correlation:
                pass
            elif name == "rho_lam":
                pass
            elif name == "rho_v":
                kw[name] = float(np.tanh(x))
            else:
                kw[name] = float(x)
        if self.joint_correlation:
            i_r = self.names.index("rho_v")
            i_a = self.names.index("rho_lam")
            r = float(np.tanh(u[i_r]))
            psi = float(u[i_a])
            kw["rho_v"] = r * float(np.cos(psi))
            kw["rho_lam"] = r * float(np.sin(psi))
        return ModelParams(variant=self.variant, h=h, **kw)


@dataclass(frozen=True)
class EstimationResult:
    """Outcome of a maximum-likelihood fit.

    Attributes
    ----------
    params : ModelParams
        Parameter set at the optimum found.
    loglik : float
        Log-likelihood at ``params``.
    std_errors : dict
        Robust standard error per active parameter name; entries are NaN
        when the score outer product is numerically singular.
    converged : bool
        Optimizer success flag.
    n_evals : int
        Total number of likelihood evaluations across restarts.
    message : str
        Optimizer status message.
    spec : GridSpec
        Filter resolution the fit used.
    """

    params: ModelParams
    loglik: float
    std_errors: dict
    converged: bool
    n_evals: int
    message: str
    spec: GridSpec = None


def default_start(variant: ModelVariant, y: np.ndarray, h: float) -> ModelParams:
    """Heuristic starting point built from sample moments of the returns."""
    y = np.asarray(y, dtype=np.float64)
    theta0 = float(np.clip(np.var(y) / h, 1e-4, 0.25))
    mu0 = float(np.clip(np.mean(y) / h + 0.5 * theta0, -0.5, 0.5))
    kw = dict(mu=mu0, kappa=4.0, theta=theta0, sigma=0.4, rho_v=-0.5)
    if variant is not ModelVariant.SV:
        kw.update(omega=3.0, alpha=-0.01, delta=0.02)
    if variant in (ModelVariant.SVCJ, ModelVariant.SVCJSI):
        kw.update(nu=0.01, rho_z=-1.0)
    if variant is ModelVariant.SVCJSI:
        kw.update(chi=3.0, xi=1.0, rho_lam=-0.2)
    return ModelParams(variant=variant, h=h, **kw)


def _objective(transform: ParamTransform, y: np.ndarray, h: float,
               spec: GridSpec):
    counter = {"n": 0}

    def fun(u: np.ndarray) -> float:
        counter["n"] += 1
        try:
            params = transform.to_params(u, h)
            prep = prepare_filter(params, spec)
            out = filter_prepared(prep, y)
        except (ZeroLikelihoodError, GridError, ValueError, FloatingPointError):
            return np.inf
        if not np.isfinite(out.total_loglik):
            return np.inf
        return -out.total_loglik

    return fun, counter


def estimate(variant: ModelVariant, y: np.ndarray, h: float = 1.0 / 252.0,
             grid_spec: GridSpec | None = None,
             start: ModelParams | None = None,
             compute_std_errors: bool = True,
             maxiter: int | None = None) -> EstimationResult:
    """Fit a model to a return series by maximizing the filter likelihood.

    Parameters
    ----------
    variant : ModelVariant
        Model to fit.
    y : ndarray
        Log-return observations.
    h : float
        Observation interval in years.
    grid_spec : GridSpec, optional
        Filter resolution; defaults to :func:`default_grid_spec`.
    start : ModelParams, optional
        Starting parameter values; defaults to moment-based heuristics.
    compute_std_errors : bool
        Whether to evaluate robust standard errors at the optimum.
    maxiter : int, optional
        Cap on simplex iterations per optimizer run.

    Returns
    -------
    EstimationResult
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("y must be a 1-d array with at least 2 observations")
    spec = grid_spec if grid_spec is not None else default_grid_spec(variant)
    if start is None:
        start = default_start(variant, y, h)
    elif start.variant is not variant:
        raise ValueError("start parameters are for a different variant")

    transform = ParamTransform.for_variant(variant)
    fun, counter = _objective(transform, y, h, spec)
    u0 = transform.to_unconstrained(start)
    k = u0.size
    if maxiter is None:
        maxiter = 400 * k

    res = minimize(fun, u0, method="Nelder-Mead",
                   options={"maxiter": maxiter, "xatol": 1e-5,
                            "fatol": 1e-7, "adaptive": True})
    # One restart from the incumbent catches premature simplex collapse.
    res2 = minimize(fun, res.x, method="Nelder-Mead",
                    options={"maxiter": maxiter, "xatol": 1e-6,
                             "fatol": 1e-8, "adaptive": True})
    best = res2 if res2.fun <= res.fun else res

    params_hat = transform.to_params(best.x, h)
    loglik = -float(best.fun)
    ses = {}
    if compute_std_errors and np.isfinite(loglik):
        ses = robust_standard_errors(params_hat, y, spec)
    return EstimationResult(params=params_hat, loglik=loglik,
                            std_errors=ses,
                            converged=bool(res2.success or res.success),
                            n_evals=int(counter["n"]),
                            message=str(best.message), spec=spec)


def _contribs(params: ModelParams, y: np.ndarray, spec: GridSpec) -> np.ndarray:
    prep = prepare_filter(params, spec)
    return filter_prepared(prep, y).loglik_contribs


def robust_standard_errors(params: ModelParams, y: np.ndarray,
                           spec: GridSpec | None = None,
                           rel_step: float = 1e-5) -> dict:
    """Outer-product-of-gradients standard errors for the active parameters.

    Per-observation scores are taken by central differences in the
    unconstrained coordinates, the score covariance is inverted there,
    and the result is mapped back through the Jacobian of the coordinate
    transform.

    Parameters
    ----------
    params : ModelParams
        Point at which to evaluate the scores, normally the MLE.
    y : ndarray
        Log-return observations used in the fit.
    spec : GridSpec, optional
        Filter resolution; defaults to the variant default.
    rel_step : float
        Relative step for the central differences.

    Returns
    -------
    dict
        Standard error per active parameter name; NaN where the score
        matrix is singular.
    """
    y = np.asarray(y, dtype=np.float64)
    if spec is None:
        spec = default_grid_spec(params.variant)
    transform = ParamTransform.for_variant(params.variant)
    u0 = transform.to_unconstrained(params)
    k = u0.size
    t_len = y.size

    scores = np.zeros((t_len, k))
    for i in range(k):
        step = rel_step * max(abs(u0[i]), 1.0)
        up = u0.copy()
        up[i] += step
        dn = u0.copy()
        dn[i] -= step
        try:
            c_up = _contribs(transform.to_params(up, params.h), y, spec)
            c_dn = _contribs(transform.to_params(dn, params.h), y, spec)
        except (ZeroLikelihoodError, GridError, ValueError):
            return {name: float("nan") for name in transform.names}
        scores[:, i] = (c_up - c_dn) / (2.0 * step)

    opg = scores.T @ scores
    try:
        cov_u = np.linalg.pinv(opg)
    except np.linalg.LinAlgError:
        return {name: float("nan") for name in transform.names}

    # Jacobian of raw parameters w.r.t. unconstrained coordinates.
    jac = np.zeros((k, k))
    for i in range(k):
        step = rel_step * max(abs(u0[i]), 1.0)
        up = u0.copy()
        up[i] += step
        dn = u0.copy()
        dn[i] -= step
        p_up = transform.to_params(up, params.h).as_dict()
        p_dn = transform.to_params(dn, params.h).as_dict()
        for j, name in enumerate(transform.names):
            jac[j, i] = (p_up[name] - p_dn[name]) / (2.0 * step)

    cov_raw = jac @ cov_u @ jac.T
    diag = np.diag(cov_raw).copy()
    diag[diag < 0] = np.nan
    ses = np.sqrt(diag)
    return {name: float(se) for name, se in zip(transform.names, ses)}


def loglik_gradient(params: ModelParams, y: np.ndarray,
                    spec: GridSpec | None = None,
                    rel_step: float = 1e-6) -> dict:
    """Central-difference gradient of the total log-likelihood.

    Differentiates in the raw parameter space over the active names,
    which is convenient for checking first-order conditions at a
    candidate optimum.
    """
    y = np.asarray(y, dtype=np.float64)
    if spec is None:
        spec = default_grid_spec(params.variant)
    grad = {}
    for name in params.active_names():
        x0 = params.as_dict()[name]
        step = rel_step * max(abs(x0), 1e-3)
        p_up = params.replace(**{name: x0 + step})
        p_dn = params.replace(**{name: x0 - step})
        l_up = float(np.sum(_contribs(p_up, y, spec)))
        l_dn = float(np.sum(_contribs(p_dn, y, spec)))
        grad[name] = (l_up - l_dn) / (2.0 * step)
    return grad
