"""Command line interface.

Exit codes: 0 on success, 2 for configuration or input errors, 3 for
numerical failures (degenerate components, singular matrices, divergence).
"""

from __future__ import annotations

import argparse
import json
import sys
from itertools import product
from pathlib import Path

import numpy as np

from . import io as rio
from .contrastive import estimate_A, extract_cumulants
from .errors import ConfigError, NumericError
from .experiments import (
    ExperimentConfig,
    RunReport,
    generate,
    run,
    sweep,
    table_to_csv,
    table_to_json,
)
from .tensor_core import unfold

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _load_config(args, setting=None) -> ExperimentConfig:
    obj = rio.read_json(args.config) if args.config else {}
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    if setting is not None:
        if obj.get("setting", setting) != setting:
            raise ConfigError(f"config setting {obj['setting']!r} does not match {setting!r}")
        obj["setting"] = setting
    if args.seed is not None:
        obj["seed"] = args.seed
    if getattr(args, "arms", None):
        obj["arms"] = args.arms
    if getattr(args, "t_max", None) is not None:
        obj["t_max"] = args.t_max
    return ExperimentConfig.from_dict(obj)


def _emit(text: str, out: Path, name: str) -> Path:
    path = out / name
    path.write_text(text)
    return path


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = _load_config(args)
    data = generate(config)
    out = _out_dir(args)
    rio.write_matrix(out / "U.csv", data.U)
    rio.write_matrix(out / "V.csv", data.V)
    if data.views is not None:
        for i, X in enumerate(data.views, start=1):
            rio.write_matrix(out / f"view{i}.csv", X)
    else:
        rio.write_matrix(out / "S1_hidden.csv", data.S1)
        rio.write_matrix(out / "A_true.csv", data.A)
    if data.y is not None:
        rio.write_matrix(out / "y.csv", data.y[:, None])
    truth = {k: v for k, v in data.truth.items() if isinstance(v, np.ndarray)}
    (out / "truth.json").write_text(json.dumps({k: v.tolist() for k, v in truth.items()}))
    (out / "config.json").write_text(json.dumps(config.to_dict(), indent=2))
    print(f"wrote {data.U.shape[0]} samples to {out}")
    return EXIT_OK


def cmd_extract_a(args) -> int:
    U = rio.read_matrix(args.u)
    V = rio.read_matrix(args.v)
    A_hat, report = estimate_A(U, V)
    out = _out_dir(args)
    rio.write_matrix(out / "A_hat.csv", A_hat)
    (out / "conditioning.json").write_text(json.dumps(report.as_dict(), indent=2))
    print(json.dumps(report.as_dict()))
    return EXIT_OK


def cmd_extract_cumulants(args) -> int:
    U = rio.read_matrix(args.u)
    V = rio.read_matrix(args.v)
    t_max = 4 if args.t_max is None else args.t_max
    if args.a:
        A = rio.read_matrix(args.a)
        report = None
    else:
        A, report = estimate_A(U, V)
    ext = extract_cumulants(U, V, A, t_max=t_max)
    out = _out_dir(args)
    written = []
    for j in (1, 2, 3):
        comp = ext.component(j)
        rio.write_matrix(out / f"S{j}_mean.csv", comp.mean[None, :])
        for t in range(2, t_max + 1):
            name = f"S{j}_kappa{t}.csv"
            rio.write_matrix(out / name, unfold(comp.cumulant(t)))
            written.append(name)
    rio.write_matrix(out / "A_used.csv", A)
    if report is not None:
        (out / "conditioning.json").write_text(json.dumps(report.as_dict(), indent=2))
    print(f"wrote {len(written)} unfolded cumulant tensors to {out}")
    return EXIT_OK


def _write_report(report: RunReport, args, stem: str) -> Path:
    out = _out_dir(args)
    if args.format == "json":
        return _emit(report.to_json(), out, f"{stem}.json")
    path = _emit(table_to_csv(report.rows()), out, f"{stem}.csv")
    _emit(report.to_json(), out, f"{stem}.json")
    return path


def cmd_fit(args) -> int:
    config = _load_config(args, setting=args.setting)
    report = run(config)
    path = _write_report(report, args, f"report_{config.setting}")
    for row in report.rows():
        print(f"{row['arm']:>6}  mse={row['mse_mean']:.6g}  std={row['mse_std']:.3g}  "
              f"ok={row['n_ok']}  failed={row['n_failed']}")
    print(f"report: {path}")
    return EXIT_OK


def _sweep_configs(obj, args) -> list:
    """Expand ``{"base": {...}, "grid": {key: [values]}}`` or a list of configs."""
    if isinstance(obj, list):
        items = obj
    elif isinstance(obj, dict) and "grid" in obj:
        base = dict(obj.get("base", {}))
        grid = obj["grid"]
        if not isinstance(grid, dict) or not grid:
            raise ConfigError("'grid' must map config keys to lists of values")
        keys = sorted(grid)
        items = [{**base, **dict(zip(keys, vals))} for vals in product(*(grid[k] for k in keys))]
    else:
        raise ConfigError("sweep config must be a list of configs or {'base', 'grid'}")
    configs = []
    for item in items:
        item = dict(item)
        if args.seed is not None:
            item["seed"] = args.seed
        if args.arms:
            item["arms"] = args.arms
        if args.t_max is not None:
            item["t_max"] = args.t_max
        configs.append(ExperimentConfig.from_dict(item))
    return configs


def cmd_sweep(args) -> int:
    if not args.config:
        raise ConfigError("sweep needs --config")
    configs = _sweep_configs(rio.read_json(args.config), args)
    rows = sweep(configs)
    out = _out_dir(args)
    if args.format == "json":
        path = _emit(table_to_json(rows), out, "sweep.json")
    else:
        path = _emit(table_to_csv(rows), out, "sweep.csv")
    print(f"{len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    obj = rio.read_json(args.input)
    if not isinstance(obj, dict) or "arms" not in obj or "config" not in obj:
        raise ConfigError("not a run report (needs 'config' and 'arms')")
    config = ExperimentConfig.from_dict(obj["config"])
    rows = []
    for arm, s in obj["arms"].items():
        rows.append({"setting": config.setting, "d": config.d, "n": config.n,
                     "perturbation_ratio": "" if config.perturbation_ratio is None
                     else config.perturbation_ratio,
                     "seed": config.seed, "arm": arm, "mse_mean": s["mse_mean"],
                     "mse_std": s["mse_std"], "n_ok": len(s["mse"]),
                     "n_failed": len(s["failures"])})
    text = table_to_json(rows) if args.format == "json" else table_to_csv(rows)
    if args.out:
        path = _emit(text, _out_dir(args), "report." + args.format)
        print(f"-> {path}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=_u64, help="64-bit seed (overrides the config)")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--arms", help="comma-separated subset of true,rca,naive,cca")
    common.add_argument("--t-max", dest="t_max", type=int, help="highest cumulant order")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    p = argparse.ArgumentParser(prog="rca", description="Rich component analysis tools")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("simulate", parents=[common], help="generate a synthetic dataset")

    s = sub.add_parser("extract-a", parents=[common], help="estimate the shared map A")
    s.add_argument("u", help="matrix file with U")
    s.add_argument("v", help="matrix file with V")

    s = sub.add_parser("extract-cumulants", parents=[common],
                       help="extract component cumulants from U and V")
    s.add_argument("u")
    s.add_argument("v")
    s.add_argument("--a", help="matrix file with A (estimated when omitted)")

    s = sub.add_parser("fit", parents=[common], help="run one benchmark setting")
    s.add_argument("setting", choices=("pca", "regression", "gmm", "logistic", "ising",
                                       "general", "biomarker_sim"))

    sub.add_parser("sweep", parents=[common], help="run a grid of benchmark settings")

    s = sub.add_parser("report", parents=[common], help="tabulate a saved run report")
    s.add_argument("input", help="report JSON written by 'fit'")
    return p


COMMANDS = {
    "simulate": cmd_simulate,
    "extract-a": cmd_extract_a,
    "extract-cumulants": cmd_extract_cumulants,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
