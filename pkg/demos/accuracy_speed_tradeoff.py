"""How many grid nodes does the likelihood actually need?

Sweeps the variance-grid size against a dense reference filter on one
simulated series, averaging the error over random parameter draws, then
fits the observed power-law decay.  The last section asks the practical
question the sweep feeds into: at a common accuracy target, which is
cheaper per likelihood call, the grid filter or a bootstrap particle
filter tuned to the same error?

Runs in roughly a minute; the full-scale study behind the defaults lives
in the benchmark module.
"""

import numpy as np

from svjfilt import (ModelParams, ModelVariant, matched_speed_comparison,
                     run_tradeoff_sweep, simulate)


def main():
    params = ModelParams(ModelVariant.SV, mu=0.06, kappa=3.0, theta=0.03,
                         sigma=0.3, rho_v=-0.6)
    y = simulate(params, 504, seed=21).y

    print("=== grid-size sweep (8 parameter draws, 2-year series) ===")
    rep = run_tradeoff_sweep(ModelVariant.SV, y, n_reference=400,
                             n_draws=8, seed=3,
                             sir_budgets=(1_000, 10_000), sir_reps=3)
    print("nodes   MAPE vs N=400    ms/eval")
    for n, mape, sec in zip(rep.n_values, rep.mapes, rep.wall_times):
        print(f"{n:5d}   {mape:10.4f}%    {1e3 * sec:7.1f}")
    print(f"fitted error decay: MAPE ~ {np.exp(rep.power_a):.3g} "
          f"* N^{rep.power_b:.2f}")

    if rep.sir_samples:
        print("\nparticle filter on the same series, for scale:")
        print("particles   MAPE             ms/eval")
        for n_part, mape, sec in rep.sir_samples:
            print(f"{n_part:9d}   {mape:10.4f}%    {1e3 * sec:7.1f}")

    print("\n=== cheapest configuration at 0.1% MAPE ===")
    cmp = matched_speed_comparison(params, y, target_mape=0.1,
                                   n_reference=400, seed=3)
    print(f"grid filter:     N = {cmp.dnf_n:6d} nodes, "
          f"{cmp.dnf_ape:.4f}% MAPE, "
          f"{1e3 * cmp.dnf_median_seconds:7.1f} ms/eval")
    print(f"particle filter: {cmp.sir_particles:6d} particles, "
          f"{cmp.sir_mape:.4f}% MAPE, "
          f"{1e3 * cmp.sir_median_seconds:7.1f} ms/eval")
    ratio = cmp.sir_median_seconds / cmp.dnf_median_seconds
    print(f"speedup at matched accuracy: {ratio:.1f}x")


if __name__ == "__main__":
    main()
