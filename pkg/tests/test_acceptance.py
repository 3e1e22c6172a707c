"""End-to-end accuracy, determinism, speed, and recovery gates.

Each test prints one PASS/FAIL line with its key statistics and elapsed
time, then asserts the documented tolerances.  Random draws come from the
well-conditioned box in ``conftest.moderate_sv_params`` where latent laws
must be resolvable on moderate grids, and from the full draw box in
``bench.DRAW_BOUNDS`` for the distribution-level studies.
"""

import math
import os
import subprocess
import sys
import time

import numpy as np

from svjfilt import (GridSpec, ModelParams, ModelVariant, estimate,
                     loglik_gradient, matched_speed_comparison,
                     mc_likelihood_oracle, run_ape_study, run_bias_study,
                     run_filter, run_tradeoff_sweep, simulate, sir_likelihood)

from conftest import moderate_sv_params

# SM true values used for the fixed-parameter studies
_SM_TRUE = dict(mu=0.06, kappa=3.0, theta=0.03, sigma=0.3, rho_v=-0.6)

_ORACLE_SPECS = {
    ModelVariant.SV: GridSpec(n_v=200, n_lam=1, n_j=0, r_max=0),
    ModelVariant.SVYJ: GridSpec(n_v=200, n_lam=1, n_j=0, r_max=4),
    ModelVariant.SVCJ: GridSpec(n_v=250, n_lam=1, n_j=100, r_max=3),
    ModelVariant.SVCJSI: GridSpec(n_v=90, n_lam=30, n_j=16, r_max=2),
}


def _sm_params() -> ModelParams:
    return ModelParams(ModelVariant.SV, **_SM_TRUE)


def _report(name: str, ok: bool, detail: str, elapsed: float):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {name}: {status} ({detail}, elapsed {elapsed:.1f}s)")


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    worst_case = ""
    for variant in ModelVariant:
        spec = _ORACLE_SPECS[variant]
        for trial in range(20):
            params = moderate_sv_params(rng, variant)
            y = simulate(params, 10, seed=rng).y
            ll_dnf = run_filter(params, y, spec).total_loglik
            ll_mc, se = mc_likelihood_oracle(
                params, y, n_paths=1_000_000,
                seed=int(rng.integers(2 ** 63)))
            ratio = abs(ll_dnf - ll_mc) / se
            if ratio > worst:
                worst = ratio
                worst_case = f"{variant.name} trial {trial}"
    elapsed = time.perf_counter() - t0
    ok = worst <= 3.0 and elapsed < 600.0
    _report("criterion 1 (oracle equivalence)", ok,
            f"max |diff|/SE {worst:.2f} at {worst_case}", elapsed)
    assert worst <= 3.0, f"worst |diff|/SE {worst:.2f} at {worst_case}"
    assert elapsed < 600.0


def test_criterion_2_dnf_sir_agreement():
    t0 = time.perf_counter()
    report = run_ape_study(ModelVariant.SV, n_trials=100, series_len=252,
                           dnf_spec=GridSpec(n_v=200, n_lam=1, n_j=0,
                                             r_max=0),
                           n_particles=100_000, seed=20240814)
    elapsed = time.perf_counter() - t0
    med = report.quantiles[0.5]
    q99 = report.quantiles[0.99]
    ok = med < 0.05 and q99 < 1.0 and elapsed < 1800.0
    _report("criterion 2 (DNF-SIR agreement)", ok,
            f"median APE {med:.4f}%, q99 {q99:.4f}%, "
            f"{report.n_failures} failures", elapsed)
    assert report.n_failures == 0
    assert med < 0.05
    assert q99 < 1.0
    assert elapsed < 1800.0


def test_criterion_3_grid_size_threshold():
    t0 = time.perf_counter()
    y = simulate(_sm_params(), 1260, seed=99).y
    report = run_tradeoff_sweep(ModelVariant.SV, y, n_reference=800,
                                n_draws=30, seed=2024)
    elapsed = time.perf_counter() - t0
    mape60 = float(report.mapes[report.n_values.index(60)])
    ok = mape60 < 0.2 and report.power_b < 0.0 and elapsed < 1200.0
    _report("criterion 3 (grid-size threshold)", ok,
            f"MAPE@60 {mape60:.4f}%, power exponent {report.power_b:.2f}",
            elapsed)
    assert mape60 < 0.2
    assert report.power_b < 0.0
    assert elapsed < 1200.0


def _loglik_in_subprocess(threads: int) -> str:
    script = (
        "from svjfilt import GridSpec, ModelParams, ModelVariant, "
        "run_filter, simulate\n"
        "p = ModelParams(ModelVariant.SV, mu=0.06, kappa=3.0, theta=0.03, "
        "sigma=0.3, rho_v=-0.6)\n"
        "y = simulate(p, 252, seed=1234).y\n"
        "out = run_filter(p, y, GridSpec(n_v=150, n_lam=1, n_j=0, r_max=0))\n"
        "print(repr(out.total_loglik))\n"
    )
    env = dict(os.environ, NUMBA_NUM_THREADS=str(threads))
    proc = subprocess.run([sys.executable, "-c", script], env=env,
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout.strip()


def test_criterion_4_smoothness_and_determinism():
    t0 = time.perf_counter()
    p = _sm_params()
    y = simulate(p, 252, seed=7).y
    spec = GridSpec(n_v=100, n_lam=1, n_j=0, r_max=0)

    a = run_filter(p, y, spec)
    b = run_filter(p, y, spec)
    bit_identical = (a.total_loglik == b.total_loglik
                     and np.array_equal(a.loglik_contribs, b.loglik_contribs))

    one_thread = _loglik_in_subprocess(1)
    four_threads = _loglik_in_subprocess(4)
    thread_invariant = one_thread == four_threads

    sir_a, _ = sir_likelihood(p, y, n_particles=5_000, seed=1)
    sir_b, _ = sir_likelihood(p, y, n_particles=5_000, seed=2)
    sir_varies = sir_a != sir_b

    g_coarse = loglik_gradient(p, y, spec, rel_step=1e-5)
    g_fine = loglik_gradient(p, y, spec, rel_step=5e-6)
    max_rel = max(abs(g_coarse[k] - g_fine[k])
                  / max(abs(g_coarse[k]), abs(g_fine[k]))
                  for k in g_coarse)

    elapsed = time.perf_counter() - t0
    ok = bit_identical and thread_invariant and sir_varies and max_rel < 5e-4
    _report("criterion 4 (smoothness/determinism)", ok,
            f"bit-identical {bit_identical}, thread-invariant "
            f"{thread_invariant}, SIR varies {sir_varies}, "
            f"gradient max rel change {max_rel:.2e}", elapsed)
    assert bit_identical
    assert thread_invariant, (one_thread, four_threads)
    assert sir_varies
    assert max_rel < 5e-4


def test_criterion_5_sir_unbiasedness_proxy():
    t0 = time.perf_counter()
    p = _sm_params()
    y = simulate(p, 50, seed=505).y
    dnf = run_filter(p, y, GridSpec(n_v=400, n_lam=1, n_j=0,
                                    r_max=0)).total_loglik
    reps = np.array([sir_likelihood(p, y, n_particles=100_000, seed=s)[0]
                     for s in range(200)])
    mean = float(reps.mean())
    half = 2.576 * float(reps.std(ddof=1)) / math.sqrt(len(reps))
    elapsed = time.perf_counter() - t0
    ok = abs(mean - dnf) <= half
    _report("criterion 5 (SIR unbiasedness proxy)", ok,
            f"DNF {dnf:.6f} vs SIR mean {mean:.6f} +/- {half:.6f}", elapsed)
    assert ok, (dnf, mean, half)


def test_criterion_6_bias_study():
    t0 = time.perf_counter()
    report = run_bias_study(ModelVariant.SV, _sm_params(), n_reps=20,
                            series_len=504, seed=6,
                            grid_spec=GridSpec(n_v=100, n_lam=1, n_j=0,
                                               r_max=0))
    elapsed = time.perf_counter() - t0
    all_bounded = all(abs(report.biases[n]) < report.rmses[n]
                      for n in report.biases)
    kappa_up = report.biases["kappa"] > 0.0
    ok = all_bounded and kappa_up and elapsed < 3600.0
    detail = ", ".join(f"{n}: bias {report.biases[n]:+.4f} rmse "
                       f"{report.rmses[n]:.4f}" for n in report.biases)
    _report("criterion 6 (bias study)", ok, detail, elapsed)
    assert all_bounded
    assert kappa_up, f"kappa bias {report.biases['kappa']:+.4f}"
    assert elapsed < 3600.0


def test_criterion_7_speed_ordering():
    t0 = time.perf_counter()
    p = _sm_params()
    y = simulate(p, 1260, seed=99).y
    cmp = matched_speed_comparison(p, y, target_mape=0.1, seed=7)
    elapsed = time.perf_counter() - t0
    ok = cmp.dnf_median_seconds < cmp.sir_median_seconds
    _report("criterion 7 (speed ordering)", ok,
            f"DNF N={cmp.dnf_n} {cmp.dnf_median_seconds * 1e3:.1f}ms vs "
            f"SIR {cmp.sir_particles} particles "
            f"{cmp.sir_median_seconds * 1e3:.1f}ms at <= {cmp.target_mape}% "
            f"MAPE", elapsed)
    assert ok, (cmp.dnf_median_seconds, cmp.sir_median_seconds)


def test_criterion_8_nested_collapse_and_estimate_smoke():
    t0 = time.perf_counter()
    rng = np.random.default_rng(808)
    spec = GridSpec(n_v=60, n_lam=1, n_j=24, r_max=3)
    worst = 0.0
    for _ in range(10):
        svcj = moderate_sv_params(rng, ModelVariant.SVCJ)
        d = svcj.as_dict()
        svcjsi = ModelParams(ModelVariant.SVCJSI, mu=d["mu"],
                             kappa=d["kappa"], theta=d["theta"],
                             sigma=d["sigma"], rho_v=d["rho_v"], chi=1.0,
                             omega=d["omega"], xi=0.0, rho_lam=0.0,
                             alpha=d["alpha"], delta=d["delta"],
                             rho_z=d["rho_z"], nu=d["nu"])
        y = simulate(svcj, 20, seed=rng).y
        ll_full = run_filter(svcjsi, y, spec).total_loglik
        ll_restricted = run_filter(svcj, y, spec).total_loglik
        worst = max(worst, abs(ll_full - ll_restricted)
                    / abs(ll_restricted))

    y_fit = simulate(_sm_params(), 504, seed=812).y
    res = estimate(ModelVariant.SV, y_fit,
                   grid_spec=GridSpec(n_v=100, n_lam=1, n_j=0, r_max=0))
    ses_finite = all(math.isfinite(se) and se > 0.0
                     for se in res.std_errors.values())

    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and res.converged and ses_finite
    _report("criterion 8 (nested collapse + estimate smoke)", ok,
            f"max rel collapse diff {worst:.2e}, converged {res.converged}, "
            f"SEs finite {ses_finite}", elapsed)
    assert worst <= 1e-8
    assert res.converged
    assert ses_finite, res.std_errors
