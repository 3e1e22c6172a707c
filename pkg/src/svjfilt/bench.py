"""Accuracy and speed studies comparing the grid filter to the particle filter.

The harness covers four experiment families: APE distributions over random
parameter draws, MAPE-versus-grid-size sweeps with power-law fits, matched
accuracy speed comparisons, and parameter-recovery bias studies.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ParticleCollapseError, ZeroLikelihoodError
from .estimate import estimate
from .gridfilter import filter_prepared, prepare_filter
from .grids import GridSpec, default_grid_spec
from .models import ACTIVE_PARAMS, ModelParams, ModelVariant
from .particle import DEFAULT_PARTICLES, sir_likelihood
from .simulate import simulate

QUANTILE_LEVELS = (0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.995)

# Uniform draw box for each parameter; rho_lam is handled separately
# because its bound depends on the drawn rho_v.
DRAW_BOUNDS = {
    "mu": (-0.20, 0.20),
    "kappa": (0.00, 10.00),
    "theta": (0.00, 0.10),
    "sigma": (0.10, 1.00),
    "rho_v": (-0.95, 0.95),
    "chi": (0.00, 50.00),
    "omega": (0.00, 25.00),
    "xi": (0.10, 10.00),
    "alpha": (-0.05, 0.05),
    "delta": (0.00, 0.10),
    "rho_z": (-5.00, 5.00),
    "nu": (0.00, 0.03),
}


def ape(loglik: float, loglik_ref: float) -> float:
    """Absolute percentage error of a log-likelihood against a reference.

    Parameters
    ----------
    loglik : float
        Value under test.
    loglik_ref : float
        Reference value; must be bounded away from zero.

    Returns
    -------
    float
        ``100 * |(loglik - loglik_ref) / loglik_ref|``.
    """
    if abs(loglik_ref) < 1e-12:
        raise ValueError("reference log-likelihood is zero; APE undefined")
    return 100.0 * abs((loglik - loglik_ref) / loglik_ref)


def random_params(variant: ModelVariant, seed, bounds: dict | None = None,
                  h: float = 1.0 / 252.0, max_tries: int = 10_000) -> ModelParams:
    """Draw a uniformly random valid parameter set for a variant.

    Draws each active parameter uniformly from its box, with
    ``|rho_lam| <= max(0.95, 1 - rho_v**2)``, and rejects draws that
    violate the joint parameter invariants.

    Parameters
    ----------
    variant : ModelVariant
        Model whose active parameters are drawn.
    seed : int or numpy.random.Generator
        Seed or generator; passing a generator advances its stream.
    bounds : dict, optional
        Per-name (lo, hi) overrides of the default box.
    h : float
        Observation interval for the returned parameter set.
    max_tries : int
        Cap on rejection-resampling attempts.

    Returns
    -------
    ModelParams
    """
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(seed)
    box = dict(DRAW_BOUNDS)
    if bounds:
        box.update(bounds)
    active = ACTIVE_PARAMS[variant]
    for _ in range(max_tries):
        kw = {}
        for name in active:
            if name == "rho_lam":
                continue
            lo, hi = box[name]
            kw[name] = rng.uniform(lo, hi)
        if "rho_lam" in active:
            if "rho_lam" in box:
                lo, hi = box["rho_lam"]
            else:
                bnd = max(0.95, 1.0 - kw["rho_v"] ** 2)
                lo, hi = -bnd, bnd
            kw["rho_lam"] = rng.uniform(lo, hi)
        try:
            return ModelParams(variant=variant, h=h, **kw)
        except ValueError:
            continue
    raise RuntimeError(
        f"no valid draw for {variant.name} after {max_tries} attempts")


@dataclass(frozen=True)
class TrialRecord:
    """Metadata and outcome for one APE-study trial."""

    trial: int
    seed: int
    params: dict
    loglik_dnf: float
    loglik_ref: float
    ape: float


@dataclass(frozen=True)
class ApeReport:
    """APE distribution over randomized trials.

    Attributes
    ----------
    variant : ModelVariant
        Model studied.
    apes : ndarray
        Per-trial APE values in percent, successful trials only.
    quantiles : dict
        APE quantiles keyed by level.
    trials : tuple of TrialRecord
        Per-trial metadata in trial order.
    n_failures : int
        Trials excluded due to numerical failure.
    series_len : int
        Observations per simulated series.
    seed : int
        Master seed of the study.
    """

    variant: ModelVariant
    apes: np.ndarray
    quantiles: dict
    trials: tuple
    n_failures: int
    series_len: int
    seed: int

    def as_rows(self):
        """Trial rows as flat dicts for CSV export."""
        rows = []
        for t in self.trials:
            row = {"trial": t.trial, "seed": t.seed, "ape": t.ape,
                   "loglik_dnf": t.loglik_dnf, "loglik_ref": t.loglik_ref}
            row.update(t.params)
            rows.append(row)
        return rows


def _quantiles(values: np.ndarray) -> dict:
    return {lvl: float(np.quantile(values, lvl)) for lvl in QUANTILE_LEVELS}


def run_ape_study(variant: ModelVariant, n_trials: int = 100,
                  series_len: int = 252, dnf_spec: GridSpec | None = None,
                  n_particles: int | None = None, seed: int = 0,
                  bounds: dict | None = None) -> ApeReport:
    """APE distribution of the grid filter against the particle filter.

    Per trial: draw a random parameter set, simulate a series at it,
    evaluate both likelihoods, and record the APE.  Trials where either
    evaluation fails numerically are excluded and counted.

    Parameters
    ----------
    variant : ModelVariant
        Model studied.
    n_trials : int
        Number of independent trials.
    series_len : int
        Observations per simulated series.
    dnf_spec : GridSpec, optional
        Grid-filter resolution; defaults to the variant default.
    n_particles : int, optional
        Particle budget; defaults to the variant default.
    seed : int
        Master seed; per-trial streams are derived from it.
    bounds : dict, optional
        Parameter draw box overrides.

    Returns
    -------
    ApeReport
    """
    if dnf_spec is None:
        dnf_spec = default_grid_spec(variant)
    if n_particles is None:
        n_particles = DEFAULT_PARTICLES[variant]
    ss = np.random.SeedSequence(seed)
    records = []
    n_failures = 0
    for trial, child in enumerate(ss.spawn(n_trials)):
        trial_seed = int(child.generate_state(1)[0])
        rng = np.random.default_rng(child)
        params = random_params(variant, rng, bounds=bounds)
        try:
            path = simulate(params, series_len, seed=rng)
            prep = prepare_filter(params, dnf_spec)
            ll_dnf = filter_prepared(prep, path.y).total_loglik
            ll_sir, _ = sir_likelihood(params, path.y,
                                       n_particles=n_particles, seed=rng)
            value = ape(ll_dnf, ll_sir)
        except (ZeroLikelihoodError, GridError, ParticleCollapseError):
            n_failures += 1
            continue
        records.append(TrialRecord(trial=trial, seed=trial_seed,
                                   params=params.as_dict(),
                                   loglik_dnf=ll_dnf, loglik_ref=ll_sir,
                                   ape=value))
    if not records:
        raise RuntimeError("all trials failed; no APE distribution")
    apes = np.array([r.ape for r in records])
    return ApeReport(variant=variant, apes=apes, quantiles=_quantiles(apes),
                     trials=tuple(records), n_failures=n_failures,
                     series_len=series_len, seed=seed)


@dataclass(frozen=True)
class SweepReport:
    """MAPE and wall time as functions of grid size.

    Attributes
    ----------
    variant : ModelVariant
        Model studied.
    n_values : tuple of int
        Variance-grid sizes swept.
    mapes : ndarray
        Mean APE (percent) against the reference grid, per size.
    wall_times : dict
        Per-size list of evaluation times in seconds (grid build excluded).
    power_a, power_b : float
        Coefficients of the fit MAPE ~ a * N**b.
    fit_residuals : ndarray
        Log-space residuals of the power fit.
    n_reference : int
        Variance-grid size of the reference evaluations.
    sir_samples : dict
        Per-particle-budget list of (loglik, seconds) pairs for boxplots.
    seed : int
        Master seed of the study.
    """

    variant: ModelVariant
    n_values: tuple
    mapes: np.ndarray
    wall_times: dict
    power_a: float
    power_b: float
    fit_residuals: np.ndarray
    n_reference: int
    sir_samples: dict = field(default_factory=dict)
    seed: int = 0

    def median_seconds(self, n: int) -> float:
        return float(np.median(self.wall_times[n]))

    def as_rows(self):
        """Per-size rows (n, mape, seconds) for CSV export."""
        return [{"n": n, "mape": float(m),
                 "seconds": self.median_seconds(n)}
                for n, m in zip(self.n_values, self.mapes)]


def _spec_for_size(variant: ModelVariant, n: int) -> GridSpec:
    return default_grid_spec(variant, n_v=n)


def fit_power_law(x: np.ndarray, y: np.ndarray):
    """Least-squares fit of y = a * x**b in log-log space.

    Returns
    -------
    (a, b, residuals) : tuple
        Coefficients and the log-space residuals.
    """
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    b, log_a = np.polyfit(lx, ly, 1)
    resid = ly - (log_a + b * lx)
    return float(np.exp(log_a)), float(b), resid


def run_tradeoff_sweep(variant: ModelVariant, y: np.ndarray,
                       n_list=None, n_reference: int = 800,
                       n_draws: int = 30, seed: int = 0,
                       bounds: dict | None = None,
                       sir_budgets=None, sir_reps: int = 5,
                       timing_repeats: int = 5) -> SweepReport:
    """MAPE against grid size on one fixed series over random parameters.

    For each of ``n_draws`` random parameter sets, the likelihood of the
    fixed series ``y`` is evaluated at every size in ``n_list`` and at
    the ``n_reference`` grid; MAPE per size is the average APE against
    the reference.  Evaluation wall times are medians over repeats with
    the grid build excluded.

    Parameters
    ----------
    variant : ModelVariant
        Model studied.
    y : ndarray
        Fixed log-return series.
    n_list : sequence of int, optional
        Variance-grid sizes; defaults to 25..200 step 25 plus 60.
    n_reference : int
        Reference variance-grid size.
    n_draws : int
        Number of random parameter sets.
    seed : int
        Master seed.
    bounds : dict, optional
        Parameter draw box overrides.
    sir_budgets : sequence of int, optional
        Particle budgets for boxplot samples; empty disables.
    sir_reps : int
        Particle-filter repetitions per budget.
    timing_repeats : int
        Timing repetitions per grid size.

    Returns
    -------
    SweepReport
    """
    y = np.asarray(y, dtype=np.float64)
    if n_list is None:
        n_list = sorted(set(range(25, 201, 25)) | {60})
    n_list = tuple(int(n) for n in n_list)
    rng = np.random.default_rng(seed)
    draws = [random_params(variant, rng, bounds=bounds) for _ in range(n_draws)]

    refs = np.empty(n_draws)
    for i, p in enumerate(draws):
        prep = prepare_filter(p, _spec_for_size(variant, n_reference))
        refs[i] = filter_prepared(prep, y).total_loglik

    mapes = np.empty(len(n_list))
    wall_times = {}
    for j, n in enumerate(n_list):
        apes = np.empty(n_draws)
        for i, p in enumerate(draws):
            prep = prepare_filter(p, _spec_for_size(variant, n))
            apes[i] = ape(filter_prepared(prep, y).total_loglik, refs[i])
        mapes[j] = apes.mean()
        prep = prepare_filter(draws[0], _spec_for_size(variant, n))
        times = []
        for _ in range(max(timing_repeats, 5)):
            t0 = time.perf_counter()
            filter_prepared(prep, y)
            times.append(time.perf_counter() - t0)
        wall_times[n] = times

    a, b, resid = fit_power_law(np.array(n_list), np.maximum(mapes, 1e-30))

    sir_samples = {}
    if sir_budgets:
        for budget in sir_budgets:
            samples = []
            for rep in range(sir_reps):
                t0 = time.perf_counter()
                ll, _ = sir_likelihood(draws[0], y, n_particles=int(budget),
                                       seed=rng)
                samples.append((ll, time.perf_counter() - t0))
            sir_samples[int(budget)] = samples

    return SweepReport(variant=variant, n_values=n_list, mapes=mapes,
                       wall_times=wall_times, power_a=a, power_b=b,
                       fit_residuals=resid, n_reference=n_reference,
                       sir_samples=sir_samples, seed=seed)


@dataclass(frozen=True)
class SpeedComparison:
    """Wall-time comparison at matched accuracy.

    Attributes
    ----------
    dnf_n : int
        Smallest swept grid size whose APE is at or under the target.
    dnf_ape : float
        APE of that grid against the reference.
    dnf_median_seconds : float
        Median evaluation time at that size.
    sir_particles : int
        Smallest tested budget whose MAPE is at or under the target.
    sir_mape : float
        MAPE of that budget over the repetitions.
    sir_median_seconds : float
        Median evaluation time at that budget.
    target_mape : float
        Accuracy target in percent.
    """

    dnf_n: int
    dnf_ape: float
    dnf_median_seconds: float
    sir_particles: int
    sir_mape: float
    sir_median_seconds: float
    target_mape: float


def matched_speed_comparison(params: ModelParams, y: np.ndarray,
                             target_mape: float = 0.1,
                             n_ladder=(25, 50, 60, 75, 100, 150, 200),
                             particle_ladder=(100, 300, 1000, 3000, 10_000,
                                              30_000, 100_000),
                             n_reference: int = 800, sir_reps: int = 8,
                             timing_repeats: int = 5,
                             seed: int = 0) -> SpeedComparison:
    """Find the cheapest grid and particle budgets hitting a MAPE target.

    Both ladders are scanned from cheap to expensive; the first rung at
    or under ``target_mape`` (relative to a large-grid reference) is
    selected, and median wall times at the selected rungs are reported.
    """
    y = np.asarray(y, dtype=np.float64)
    prep = prepare_filter(params, _spec_for_size(params.variant, n_reference))
    ref = filter_prepared(prep, y).total_loglik

    dnf_n, dnf_ape, dnf_med = None, None, None
    for n in n_ladder:
        prep = prepare_filter(params, _spec_for_size(params.variant, n))
        a = ape(filter_prepared(prep, y).total_loglik, ref)
        if a <= target_mape:
            times = []
            for _ in range(max(timing_repeats, 5)):
                t0 = time.perf_counter()
                filter_prepared(prep, y)
                times.append(time.perf_counter() - t0)
            dnf_n, dnf_ape, dnf_med = n, a, float(np.median(times))
            break
    if dnf_n is None:
        raise RuntimeError("no grid size in the ladder met the MAPE target")

    rng = np.random.default_rng(seed)
    sir_np, sir_mape, sir_med = None, None, None
    for budget in particle_ladder:
        apes, times = [], []
        for _ in range(sir_reps):
            t0 = time.perf_counter()
            ll, _ = sir_likelihood(params, y, n_particles=int(budget), seed=rng)
            times.append(time.perf_counter() - t0)
            apes.append(ape(ll, ref))
        if np.mean(apes) <= target_mape:
            sir_np, sir_mape = int(budget), float(np.mean(apes))
            sir_med = float(np.median(times))
            break
    if sir_np is None:
        raise RuntimeError("no particle budget in the ladder met the target")

    return SpeedComparison(dnf_n=dnf_n, dnf_ape=float(dnf_ape),
                           dnf_median_seconds=dnf_med,
                           sir_particles=sir_np, sir_mape=sir_mape,
                           sir_median_seconds=sir_med,
                           target_mape=target_mape)


@dataclass(frozen=True)
class BiasReport:
    """Parameter-recovery statistics over simulated replications.

    Attributes
    ----------
    variant : ModelVariant
        Model studied.
    true_params : ModelParams
        Generating parameter set.
    means, biases, rmses : dict
        Per-parameter statistics over converged replications.
    estimates : tuple of dict
        Per-replication estimated parameter values.
    n_reps : int
        Replications attempted.
    n_converged : int
        Replications whose optimizer reported convergence.
    series_len : int
        Observations per replication.
    seed : int
        Master seed.
    """

    variant: ModelVariant
    true_params: ModelParams
    means: dict
    biases: dict
    rmses: dict
    estimates: tuple
    n_reps: int
    n_converged: int
    series_len: int
    seed: int

    def as_rows(self):
        """Per-parameter rows (param, true, mean, bias, rmse) for export."""
        truth = self.true_params.as_dict()
        return [{"param": name, "true": truth[name],
                 "mean": self.means[name], "bias": self.biases[name],
                 "rmse": self.rmses[name]}
                for name in self.true_params.active_names()]


def run_bias_study(variant: ModelVariant, true_params: ModelParams,
                   n_reps: int = 20, series_len: int = 504, seed: int = 0,
                   grid_spec: GridSpec | None = None,
                   maxiter: int | None = None) -> BiasReport:
    """Simulate, refit, and aggregate bias and RMSE per parameter.

    Parameters
    ----------
    variant : ModelVariant
        Model simulated and fitted.
    true_params : ModelParams
        Generating parameter set.
    n_reps : int
        Number of simulated replications.
    series_len : int
        Observations per replication.
    seed : int
        Master seed; replication seeds derive from it.
    grid_spec : GridSpec, optional
        Filter resolution used in estimation.
    maxiter : int, optional
        Optimizer iteration cap per replication.

    Returns
    -------
    BiasReport
    """
    if true_params.variant is not variant:
        raise ValueError("true_params variant mismatch")
    ss = np.random.SeedSequence(seed)
    names = true_params.active_names()
    estimates = []
    n_converged = 0
    for child in ss.spawn(n_reps):
        path = simulate(true_params, series_len,
                        seed=np.random.default_rng(child))
        res = estimate(variant, path.y, h=true_params.h,
                       grid_spec=grid_spec, compute_std_errors=False,
                       maxiter=maxiter)
        if res.converged:
            n_converged += 1
        estimates.append({n: res.params.as_dict()[n] for n in names})

    truth = true_params.as_dict()
    arr = {n: np.array([e[n] for e in estimates]) for n in names}
    means = {n: float(arr[n].mean()) for n in names}
    biases = {n: float(means[n] - truth[n]) for n in names}
    rmses = {n: float(np.sqrt(np.mean((arr[n] - truth[n]) ** 2)))
             for n in names}
    return BiasReport(variant=variant, true_params=true_params, means=means,
                      biases=biases, rmses=rmses, estimates=tuple(estimates),
                      n_reps=n_reps, n_converged=n_converged,
                      series_len=series_len, seed=seed)
