"""Command-line entry points.

Subcommands: ``simulate``, ``likelihood``, ``filter``, ``estimate``, and
``bench ape|sweep|bias``.  Exit codes: 0 success, 1 usage error, 2 data
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bench import run_ape_study, run_bias_study, run_tradeoff_sweep
from .errors import (DataError, GridError, ParticleCollapseError,
                     ZeroLikelihoodError)
from .estimate import estimate
from .gridfilter import filter_prepared, prepare_filter, run_filter
from .grids import GridSpec, default_grid_spec
from .io import (RunConfig, estimation_payload, load_config, load_returns,
                 write_csv, write_filter_csv, write_json, write_path_csv)
from .models import PARAM_NAMES, ModelParams, ModelVariant
from .particle import sir_likelihood
from .simulate import simulate

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERICAL_EXIT = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; route through an
    # exception so main can map usage problems to exit code 1.
    def error(self, message):
        raise _UsageError(message)


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None,
                   help="cap on engine worker threads")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--json-errors", action="store_true",
                   help="emit a JSON error object on failures")
    p.add_argument("--variant", default=None,
                   choices=["sv", "svyj", "svcj", "svcjsi"])
    p.add_argument("--param", action="append", default=[],
                   metavar="NAME=VALUE", help="model parameter override")
    p.add_argument("--n-v", type=int, default=None, dest="n_v")
    p.add_argument("--n-lam", type=int, default=None, dest="n_lam")
    p.add_argument("--n-j", type=int, default=None, dest="n_j")
    p.add_argument("--r-max", type=int, default=None, dest="r_max")


def _build_parser() -> _Parser:
    parser = _Parser(prog="svjfilt",
                     description="Grid-filter likelihoods for "
                                 "jump-diffusion models")
    parser.add_argument("--version", action="version",
                        version=f"svjfilt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a return path to CSV")
    _common_flags(p)
    p.add_argument("--T", type=int, default=252, help="number of returns")

    p = sub.add_parser("likelihood", help="print the log-likelihood")
    _common_flags(p)
    p.add_argument("--data", default=None, help="CSV with returns or prices")
    p.add_argument("--mode", choices=["returns", "prices"], default=None)
    p.add_argument("--column", default=None)
    p.add_argument("--engine", choices=["dnf", "sir"], default=None)
    p.add_argument("--particles", type=int, default=None)

    p = sub.add_parser("filter", help="write filtered states to CSV")
    _common_flags(p)
    p.add_argument("--data", default=None)
    p.add_argument("--mode", choices=["returns", "prices"], default=None)
    p.add_argument("--column", default=None)

    p = sub.add_parser("estimate", help="fit by maximum likelihood to JSON")
    _common_flags(p)
    p.add_argument("--data", default=None)
    p.add_argument("--mode", choices=["returns", "prices"], default=None)
    p.add_argument("--column", default=None)
    p.add_argument("--no-std-errors", action="store_true")
    p.add_argument("--maxiter", type=int, default=None)

    p = sub.add_parser("bench", help="accuracy/speed studies")
    bench_sub = p.add_subparsers(dest="study", required=True)

    b = bench_sub.add_parser("ape", help="APE distribution study")
    _common_flags(b)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--series-len", type=int, default=252)
    b.add_argument("--particles", type=int, default=None)

    b = bench_sub.add_parser("sweep", help="MAPE vs grid size sweep")
    _common_flags(b)
    b.add_argument("--data", default=None,
                   help="fixed series; simulated when omitted")
    b.add_argument("--mode", choices=["returns", "prices"], default=None)
    b.add_argument("--column", default=None)
    b.add_argument("--series-len", type=int, default=1260)
    b.add_argument("--draws", type=int, default=30)
    b.add_argument("--n-list", default=None,
                   help="comma-separated grid sizes")
    b.add_argument("--n-reference", type=int, default=800)

    b = bench_sub.add_parser("bias", help="parameter recovery study")
    _common_flags(b)
    b.add_argument("--reps", type=int, default=20)
    b.add_argument("--series-len", type=int, default=504)

    return parser


def _parse_param_overrides(pairs) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise _UsageError(f"--param expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in PARAM_NAMES:
            raise _UsageError(f"unknown parameter {name!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise _UsageError(f"non-numeric value for {name!r}: {value!r}")
    return out


def _merge_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    updates = {}
    if args.variant is not None:
        updates["variant"] = args.variant
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    if args.threads is not None:
        updates["threads"] = args.threads
    for name in ("n_v", "n_lam", "n_j", "r_max"):
        v = getattr(args, name, None)
        if v is not None:
            updates[name] = v
    for name in ("data", "mode", "column", "engine"):
        v = getattr(args, name, None)
        if v is not None:
            updates[name] = v
    if getattr(args, "particles", None) is not None:
        updates["n_particles"] = args.particles
    if updates:
        base = {f: getattr(cfg, f) for f in
                ("variant", "n_v", "n_lam", "n_j", "r_max", "n_particles",
                 "seed", "h", "data", "mode", "column", "out", "engine",
                 "threads")}
        base.update(updates)
        cfg = RunConfig(extras=cfg.extras, **base)
    return cfg


def _model_params(cfg: RunConfig, overrides: dict) -> ModelParams:
    kw = {k: float(v) for k, v in cfg.extras.items() if k in PARAM_NAMES}
    kw.update(overrides)
    variant = cfg.model_variant
    defaults = {"theta": 0.04, "kappa": 1.0, "sigma": 0.3}
    if variant is not ModelVariant.SV and "omega" not in kw:
        defaults["omega"] = 2.0
    for k, v in defaults.items():
        kw.setdefault(k, v)
    return ModelParams(variant=variant, h=cfg.h, **kw)


def _grid_spec(cfg: RunConfig, variant: ModelVariant) -> GridSpec:
    spec = default_grid_spec(variant, n_v=cfg.n_v if cfg.n_v > 0 else None)
    kw = {}
    if cfg.n_lam > 0:
        kw["n_lam"] = cfg.n_lam
    if cfg.n_j >= 0:
        kw["n_j"] = cfg.n_j
    if cfg.r_max >= 0:
        kw["r_max"] = cfg.r_max
    if kw:
        spec = GridSpec(n_v=spec.n_v,
                        n_lam=kw.get("n_lam", spec.n_lam),
                        n_j=kw.get("n_j", spec.n_j),
                        r_max=kw.get("r_max", spec.r_max))
    return spec


def _apply_threads(cfg: RunConfig):
    if cfg.threads > 0:
        import numba
        cap = min(cfg.threads, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(max(cap, 1))


def _load_series(cfg: RunConfig):
    if not cfg.data:
        raise DataError("no input data file; pass --data or set it in "
                        "the config")
    return load_returns(cfg.data, mode=cfg.mode,
                        column=cfg.column or None)


def _out_path(cfg: RunConfig, name: str) -> str:
    out_dir = cfg.out or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _cmd_simulate(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    params = _model_params(cfg, _parse_param_overrides(args.param))
    path = simulate(params, args.T, seed=cfg.seed)
    target = _out_path(cfg, "path.csv")
    write_path_csv(target, path, seed=cfg.seed, cfg=cfg)
    print(f"wrote {target} ({args.T} observations)")
    return 0


def _cmd_likelihood(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    params = _model_params(cfg, _parse_param_overrides(args.param))
    series = _load_series(cfg)
    if cfg.engine == "dnf":
        spec = _grid_spec(cfg, params.variant)
        prep = prepare_filter(params, spec)
        ll = filter_prepared(prep, series.y).total_loglik
    else:
        n_p = cfg.n_particles if cfg.n_particles > 0 else None
        ll, _ = sir_likelihood(params, series.y, n_particles=n_p,
                               seed=cfg.seed)
    print(f"engine={cfg.engine} T={len(series)} loglik={ll!r}")
    return 0


def _cmd_filter(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    params = _model_params(cfg, _parse_param_overrides(args.param))
    series = _load_series(cfg)
    spec = _grid_spec(cfg, params.variant)
    out = run_filter(params, series.y, spec)
    target = _out_path(cfg, "filter.csv")
    write_filter_csv(target, out, seed=cfg.seed, cfg=cfg)
    print(f"wrote {target} (loglik={out.total_loglik!r})")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    series = _load_series(cfg)
    variant = cfg.model_variant
    spec = _grid_spec(cfg, variant)
    start = None
    overrides = _parse_param_overrides(args.param)
    if overrides or any(k in PARAM_NAMES for k in cfg.extras):
        start = _model_params(cfg, overrides)
    res = estimate(variant, series.y, h=cfg.h, grid_spec=spec, start=start,
                   compute_std_errors=not args.no_std_errors,
                   maxiter=args.maxiter)
    target = _out_path(cfg, "estimate.json")
    write_json(target, estimation_payload(res), seed=cfg.seed, cfg=cfg)
    print(f"wrote {target} (loglik={res.loglik!r}, "
          f"converged={res.converged})")
    return 0


def _cmd_bench_ape(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    variant = cfg.model_variant
    spec = _grid_spec(cfg, variant)
    n_p = cfg.n_particles if cfg.n_particles > 0 else None
    report = run_ape_study(variant, n_trials=args.trials,
                           series_len=args.series_len, dnf_spec=spec,
                           n_particles=n_p, seed=cfg.seed)
    rows = report.as_rows()
    columns = list(rows[0].keys())
    trials_path = _out_path(cfg, "ape_trials.csv")
    write_csv(trials_path, rows, columns, seed=cfg.seed, cfg=cfg)
    summary_path = _out_path(cfg, "ape_summary.json")
    write_json(summary_path,
               {"variant": variant, "n_trials": args.trials,
                "n_failures": report.n_failures,
                "series_len": report.series_len,
                "quantiles": {str(k): v for k, v in report.quantiles.items()}},
               seed=cfg.seed, cfg=cfg)
    print(f"wrote {trials_path} and {summary_path} "
          f"(median APE {report.quantiles[0.5]:.4f}%)")
    return 0


def _cmd_bench_sweep(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    variant = cfg.model_variant
    if cfg.data:
        y = _load_series(cfg).y
    else:
        params = _model_params(cfg, _parse_param_overrides(args.param))
        y = simulate(params, args.series_len, seed=cfg.seed).y
    n_list = None
    if args.n_list:
        n_list = [int(s) for s in args.n_list.split(",") if s.strip()]
    report = run_tradeoff_sweep(variant, y, n_list=n_list,
                                n_reference=args.n_reference,
                                n_draws=args.draws, seed=cfg.seed)
    sweep_path = _out_path(cfg, "sweep.csv")
    write_csv(sweep_path, report.as_rows(), ("n", "mape", "seconds"),
              seed=cfg.seed, cfg=cfg)
    summary_path = _out_path(cfg, "sweep_summary.json")
    write_json(summary_path,
               {"variant": variant, "n_values": list(report.n_values),
                "mapes": report.mapes, "power_a": report.power_a,
                "power_b": report.power_b,
                "n_reference": report.n_reference},
               seed=cfg.seed, cfg=cfg)
    print(f"wrote {sweep_path} and {summary_path} "
          f"(power fit exponent {report.power_b:.3f})")
    return 0


def _cmd_bench_bias(args) -> int:
    cfg = _merge_config(args)
    _apply_threads(cfg)
    variant = cfg.model_variant
    true_params = _model_params(cfg, _parse_param_overrides(args.param))
    spec = _grid_spec(cfg, variant)
    report = run_bias_study(variant, true_params, n_reps=args.reps,
                            series_len=args.series_len, seed=cfg.seed,
                            grid_spec=spec)
    bias_path = _out_path(cfg, "bias.csv")
    write_csv(bias_path, report.as_rows(),
              ("param", "true", "mean", "bias", "rmse"),
              seed=cfg.seed, cfg=cfg)
    summary_path = _out_path(cfg, "bias_summary.json")
    write_json(summary_path,
               {"variant": variant, "n_reps": report.n_reps,
                "n_converged": report.n_converged,
                "series_len": report.series_len,
                "means": report.means, "biases": report.biases,
                "rmses": report.rmses},
               seed=cfg.seed, cfg=cfg)
    print(f"wrote {bias_path} and {summary_path} "
          f"({report.n_converged}/{report.n_reps} converged)")
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "likelihood": _cmd_likelihood,
    "filter": _cmd_filter,
    "estimate": _cmd_estimate,
    ("bench", "ape"): _cmd_bench_ape,
    ("bench", "sweep"): _cmd_bench_sweep,
    ("bench", "bias"): _cmd_bench_bias,
}


def _fail(exc: Exception, code: int, json_errors: bool) -> int:
    print(f"error: {exc}", file=sys.stderr)
    if json_errors:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "exit_code": code}))
    return code


def main(argv=None) -> int:
    """Run the command line; returns the process exit code."""
    parser = _build_parser()
    json_errors = False
    try:
        args = parser.parse_args(argv)
        json_errors = getattr(args, "json_errors", False)
        key = (args.command, args.study) if args.command == "bench" \
            else args.command
        return _DISPATCH[key](args)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        if json_errors:
            print(json.dumps({"error": "UsageError", "message": str(e),
                              "exit_code": _USAGE_EXIT}))
        return _USAGE_EXIT
    except SystemExit as e:
        # argparse --help/--version exit; preserve success, map usage to 1
        code = e.code if isinstance(e.code, int) else 0
        return 0 if code == 0 else _USAGE_EXIT
    except (DataError, OSError) as e:
        return _fail(e, _DATA_EXIT, json_errors)
    except (ZeroLikelihoodError, GridError, ParticleCollapseError,
            FloatingPointError, np.linalg.LinAlgError) as e:
        return _fail(e, _NUMERICAL_EXIT, json_errors)
    except (ValueError, RuntimeError) as e:
        return _fail(e, _NUMERICAL_EXIT, json_errors)


if __name__ == "__main__":
    sys.exit(main())
