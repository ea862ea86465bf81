"""Command-line interface.

Subcommands: ``synth``, ``fit``, ``select``, ``sweep``, ``datasets``.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
All fitting hyperparameters can be overridden with a JSON ``--config``
file; ``--plot`` additionally renders figures next to the data files.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio, plots
from .datagen import SynthConfig, sample_synthetic
from .em import em_fit
from .errors import DataError, NumericalError, ValidationError
from .selection import EmConfig, FitConfig, aic_bic_curve, model_order_posterior
from .sweep import METHODS, run_sweep
from .vb import Hyperparams, extract_mode, vb_fit

CONFIG_KEYS = {
    "alpha0", "beta0", "m0", "w0", "nu0",           # prior
    "tol", "max_iter", "restarts",                  # vb/em iteration
    "var_floor",                                    # em
    "radius", "wishart_dof", "dirichlet_alpha", "min_weight",  # generator
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _common_flags(parser, jobs=False, plot=False):
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--kmax", type=int, default=10)
    parser.add_argument("--out", required=True, help="output file or directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--config", help="JSON file overriding hyperparameters")
    if jobs:
        parser.add_argument("--jobs", type=int, default=1)
    if plot:
        parser.add_argument("--plot", action="store_true",
                            help="also render figures next to the data files")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmmselect",
                     description="Gaussian mixture fitting and model-order selection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p.add_argument("--khat", type=int, required=True, help="generating order")
    p.add_argument("--n", type=int, required=True, help="number of observations")
    p.add_argument("--labels", action="store_true", help="include the label column")
    _common_flags(p)

    p = sub.add_parser("fit", help="fit a mixture with a fixed K")
    p.add_argument("data", help="CSV dataset to fit")
    p.add_argument("--method", choices=("vb", "em"), default="vb")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--label-column", default=None)
    _common_flags(p)

    p = sub.add_parser("select", help="choose the number of components")
    p.add_argument("data", nargs="?", help="CSV dataset (or use --builtin)")
    p.add_argument("--builtin", choices=sorted(dataio.BUILTIN_COUNTS),
                   help="use a vendored dataset instead of a file")
    p.add_argument("--criterion", choices=("korea", "aic", "bic", "all"), default="korea")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--label-column", default=None)
    _common_flags(p, jobs=True, plot=True)

    p = sub.add_parser("sweep", help="mean/MSE sweep over k_hat, N, and seeds")
    p.add_argument("--khat-list", default="1,2,3,4,5")
    p.add_argument("--n-list", default="50,100,200,300,500,1000,2000,3000")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--methods", default="korea,aic,bic")
    p.add_argument("--min-weight", type=float, default=0.0)
    p.add_argument("--timings", action="store_true",
                   help="include wall times in the emitted files")
    _common_flags(p, jobs=True, plot=True)

    p = sub.add_parser("datasets", help="list or export the vendored datasets")
    p.add_argument("action", choices=("list", "export"))
    p.add_argument("name", nargs="?", help="dataset name (for export)")
    p.add_argument("--out", help="output CSV path (for export)")
    return parser


def _load_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as handle:
        cfg = json.load(handle)
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise _UsageError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _hyper_from(cfg, data):
    explicit = {k: cfg[k] for k in ("alpha0", "beta0", "nu0") if k in cfg}
    hyper = Hyperparams.from_data(data, **explicit)
    if "m0" in cfg or "w0" in cfg:
        hyper = Hyperparams(
            alpha0=hyper.alpha0, beta0=hyper.beta0,
            m0=np.asarray(cfg.get("m0", hyper.m0), dtype=float),
            w0=np.asarray(cfg.get("w0", hyper.w0), dtype=float),
            nu0=hyper.nu0,
        )
    return hyper


def _fit_cfg(cfg, seed):
    return FitConfig(seed=seed, tol=cfg.get("tol", 1e-8),
                     max_iter=cfg.get("max_iter", 500),
                     restarts=cfg.get("restarts", 3))


def _em_cfg(cfg, seed):
    return EmConfig(seed=seed, tol=cfg.get("tol", 1e-8),
                    max_iter=cfg.get("max_iter", 500),
                    restarts=cfg.get("restarts", 3),
                    var_floor=cfg.get("var_floor", 1e-6))


def _read_data(args):
    label = args.label_column
    if label is not None and str(label).lstrip("-").isdigit():
        label = int(label)
    data, _ = dataio.load_csv(args.data, has_header=args.has_header, label_column=label)
    return data


def _cmd_synth(args, cfg):
    synth = SynthConfig(
        k_hat=args.khat, n=args.n, seed=args.seed,
        radius=cfg.get("radius", 20.0), wishart_dof=cfg.get("wishart_dof", 5.0),
        dirichlet_alpha=cfg.get("dirichlet_alpha"),
        min_weight=cfg.get("min_weight", 0.0),
    )
    sample = sample_synthetic(synth)
    dataio.write_csv_dataset(sample.data, args.out,
                             labels=sample.labels if args.labels else None)
    return 0


def _cmd_fit(args, cfg):
    data = _read_data(args)
    if args.method == "vb":
        hyper = _hyper_from(cfg, data)
        fc = _fit_cfg(cfg, args.seed)
        state = vb_fit(data, args.k, hyper, seed=fc.seed, tol=fc.tol,
                       max_iter=fc.max_iter, restarts=fc.restarts)
        mode = extract_mode(state, hyper)
        diagnostics = {
            "elbo": state.elbo_final,
            "iterations": len(state.elbo_trace) - 1,
            "fallbacks": list(mode.fallbacks),
        }
        dataio.export_model_json(mode.pi_star, mode.mu_star, mode.q_star,
                                 diagnostics, args.out)
    else:
        ec = _em_cfg(cfg, args.seed)
        params, loglik, trace = em_fit(data, args.k, seed=ec.seed, tol=ec.tol,
                                       max_iter=ec.max_iter, restarts=ec.restarts,
                                       var_floor=ec.var_floor, return_trace=True)
        diagnostics = {"loglik": loglik, "iterations": len(trace) - 1, "fallbacks": []}
        dataio.export_model_json(params.weights, params.means, params.precisions,
                                 diagnostics, args.out)
    return 0


def _cmd_select(args, cfg):
    if (args.data is None) == (args.builtin is None):
        raise _UsageError("select needs a dataset path or --builtin, not both")
    if args.builtin:
        real = dataio.load_builtin(args.builtin)
        data = real.data
        name = args.builtin
    else:
        data = _read_data(args)
        name = Path(args.data).stem

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hyper = _hyper_from(cfg, data)
    posterior = curve = None

    if args.criterion in ("korea", "all"):
        posterior = model_order_posterior(data, k_max=args.kmax, hyper=hyper,
                                          fit_cfg=_fit_cfg(cfg, args.seed),
                                          jobs=args.jobs)
        dataio.emit_results(posterior, out / f"posterior.{args.format}", args.format)
    if args.criterion in ("aic", "bic", "all"):
        curve = aic_bic_curve(data, k_max=args.kmax, em_cfg=_em_cfg(cfg, args.seed))
        dataio.emit_results(curve, out / f"criteria.{args.format}", args.format)

    if args.plot:
        if posterior is not None:
            plots.save_posterior_plot(posterior, out / "posterior.png")
        if curve is not None:
            plots.save_criteria_plot(curve, out / "criteria.png")
        if posterior is not None and curve is not None and data.shape[1] == 1:
            plots.save_report(data, posterior, curve, out / "report.png", name=name)
    return 0


def _cmd_sweep(args, cfg):
    k_hats = [int(tok) for tok in args.khat_list.split(",") if tok]
    ns = [int(tok) for tok in args.n_list.split(",") if tok]
    methods = tuple(tok for tok in args.methods.split(",") if tok)
    result = run_sweep(k_hats, ns, runs=args.runs, k_max=args.kmax,
                       methods=methods, seed0=args.seed, jobs=args.jobs,
                       min_weight=args.min_weight,
                       fit_cfg=_fit_cfg(cfg, 0), em_cfg=_em_cfg(cfg, 0))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataio.emit_results(result, out / f"cells.{args.format}", args.format,
                        timings=args.timings)
    _write_aggregates_csv(result, out / "aggregates.csv")
    if args.plot:
        plots.save_sweep_plot(result, out / "sweep.png")
    return 0


def _write_aggregates_csv(result, path):
    import csv

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["k_hat", "n", "method", "mean_k_star", "mse", "runs"])
        for agg in result.aggregates:
            writer.writerow([agg.k_hat, agg.n, agg.method,
                             repr(agg.mean_k_star), repr(agg.mse), agg.runs])


def _cmd_datasets(args):
    if args.action == "list":
        vendored = dataio.available_builtins()
        for name in sorted(dataio.BUILTIN_COUNTS):
            status = "vendored" if name in vendored else "unavailable"
            print(f"{name}\t{dataio.BUILTIN_COUNTS[name]} values\t{status}")
        return 0
    if not args.name or not args.out:
        raise _UsageError("datasets export needs a name and --out")
    real = dataio.load_builtin(args.name)
    dataio.write_csv_dataset(real.values, args.out, columns=[real.name])
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(getattr(args, "config", None))
        if args.command == "synth":
            return _cmd_synth(args, cfg)
        if args.command == "fit":
            return _cmd_fit(args, cfg)
        if args.command == "select":
            return _cmd_select(args, cfg)
        if args.command == "sweep":
            return _cmd_sweep(args, cfg)
        if args.command == "datasets":
            return _cmd_datasets(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
