"""Command-line front end.

Three subcommands:

  solve       run the solver on one instance file, write the estimate and
              per-iteration history
  experiment  run a preference / noise_sweep / cs_sweep config, write
              results.csv, summary.json and a manifest
  plot        render a results.csv to an SVG line chart

Exit codes: 0 success, 1 usage / I-O / validation error, 2 numerical
solver diagnostic. File formats are documented in the README.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .cmn import CmnParams
from .experiments import (
    BASELINE_LABEL,
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
)
from .solver import Problem, SolverConfig, SolverDivergenceError, solve_cmn_alm
from .svgplot import line_chart_svg

WORKERS_ENV = "CMNREC_WORKERS"

RESULTS_COLUMNS = ["variant", "grid_value", "mean_snr_db", "sd_snr_db", "n_trials", "n_failed"]


class UsageError(Exception):
    """Bad input or I/O problem; maps to exit code 1."""


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _cmn_params(doc: dict, eps: float) -> CmnParams:
    try:
        return CmnParams(float(doc["p_s"]), float(doc["p_f"]), float(doc["q"]), eps)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid norm-range parameters {doc!r}: {exc}") from exc


def _solver_config(doc: dict) -> SolverConfig:
    eps = float(doc.get("eps", 1e-2))
    cmn = _cmn_params({k: doc.get(k, d) for k, d in (("p_s", 0.0), ("p_f", 1.0), ("q", 1.0))}, eps)
    try:
        return SolverConfig(
            cmn=cmn,
            sigma=float(doc.get("sigma", 1.0)),
            mu_init=doc.get("mu_init", "auto"),
            mu_min=float(doc.get("mu_min", 0.5)),
            zeta=float(doc.get("zeta", 0.95)),
            lambda0=doc.get("lambda0", "auto"),
            tol=float(doc.get("tol", 1e-5)),
            max_iter=int(doc.get("max_iter", 100)),
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver parameters: {exc}") from exc


def _manifest(command: str, config_path: str | None, seed, out: Path) -> dict:
    doc = {
        "command": command,
        "config_path": config_path,
        "master_seed": seed,
        "out_dir": str(out),
        "tool_version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if config_path is not None:
        doc["config_sha256"] = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    return doc


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_solve(args) -> int:
    instance = _load_json(args.instance)
    params = _load_json(args.params)
    try:
        problem = Problem(instance["A"], instance["y"], float(instance.get("sigma_n", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid instance file: {exc}") from exc
    config = _solver_config(params)

    report = solve_cmn_alm(problem, config)  # SolverDivergenceError handled by main()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        out / "x_hat.json",
        {
            "x_hat": [float(v) for v in report.x_hat],
            "iterations": report.iterations,
            "converged": report.converged,
        },
    )
    with open(out / "history.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "primal", "dual", "objective", "mu"])
        for i, rec in enumerate(report.history, start=1):
            writer.writerow([i, repr(rec.primal), repr(rec.dual), repr(rec.objective), repr(rec.mu)])
    _write_json(out / "manifest.json", _manifest("solve", args.instance, None, out))
    return 0


def config_from_json(doc: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed experiment config document."""
    try:
        kind = doc["kind"]
        solver = doc.get("solver", {})
        eps = float(solver.get("eps", 1e-2))
        variants = tuple(
            (str(v["label"]), _cmn_params(v, eps)) for v in doc.get("variants", [])
        )
        grid_key = {"preference": "p_grid", "noise_sweep": "gamma_grid", "cs_sweep": "cs_grid"}.get(
            kind
        )
        if grid_key is None:
            raise UsageError(f"unknown experiment kind {kind!r}")
        grid = tuple(float(g) for g in doc[grid_key])
        seed = int(doc["master_seed"]) if seed_override is None else seed_override
        # cs_sweep derives m from the grid; the other kinds need it explicitly
        m = int(doc["m"]) if kind != "cs_sweep" else int(doc.get("m", 1))
        kwargs = dict(
            kind=kind,
            n=int(doc["n"]),
            m=m,
            k=int(doc["k"]),
            alpha=float(doc["alpha"]),
            gamma=float(doc.get("gamma", 1.0)),
            grid=grid,
            trials=int(doc["trials"]),
            master_seed=seed,
            variants=variants,
            eps=eps,
        )
        if "baseline_ps" in doc:
            kwargs["baseline_ps"] = tuple(float(p) for p in doc["baseline_ps"])
        if "matrix_norm" in doc:
            kwargs["matrix_norm"] = doc["matrix_norm"]
        if "sigma_n" in doc:
            kwargs["sigma_n"] = float(doc["sigma_n"])
        # absent solver knobs fall through to the ExperimentConfig defaults
        for key, conv in (
            ("sigma", float),
            ("mu_init", lambda v: v if v == "auto" else float(v)),
            ("mu_min", float),
            ("zeta", float),
            ("lambda0", lambda v: v if v == "auto" else float(v)),
            ("tol", float),
            ("max_iter", int),
        ):
            if key in solver:
                kwargs[key] = conv(solver[key])
        return ExperimentConfig(**kwargs)
    except UsageError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid experiment config: {exc}") from exc


def write_results_csv(path: Path, result: ExperimentResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for i, label in enumerate(result.labels):
            for j, g in enumerate(result.grid):
                writer.writerow(
                    [
                        label,
                        repr(float(g)),
                        repr(float(result.mean_snr_db[i, j])),
                        repr(float(result.sd_snr_db[i, j])),
                        result.n_trials,
                        int(result.n_failed[i, j]),
                    ]
                )


def cmd_experiment(args) -> int:
    doc = _load_json(args.config)
    cfg = config_from_json(doc, args.seed)
    workers = args.workers
    if workers is None:
        env = os.environ.get(WORKERS_ENV, "1")
        try:
            workers = int(env)
        except ValueError as exc:
            raise UsageError(f"{WORKERS_ENV}={env!r} is not an integer") from exc

    result = run_experiment(cfg, workers=workers)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(out / "results.csv", result)
    summary = {
        "kind": result.kind,
        "labels": list(result.labels),
        "grid": [float(g) for g in result.grid],
        "n_trials": result.n_trials,
        "total_failed": int(result.n_failed.sum()),
        "preference_ratios": result.preference_ratios or None,
    }
    _write_json(out / "summary.json", summary)
    _write_json(out / "manifest.json", _manifest("experiment", args.config, cfg.master_seed, out))
    print(f"wrote {out / 'results.csv'} ({len(result.labels)} curves, {len(result.grid)} grid points)")
    if result.preference_ratios:
        for label, ratio in result.preference_ratios.items():
            print(f"preference ratio {label}: {ratio:.0f}%")
    return 0


def _read_results(path: str) -> tuple[list[str], dict[str, tuple[list[float], list[float]]]]:
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not rows or not set(RESULTS_COLUMNS).issubset(rows[0].keys()):
        raise UsageError(f"{path} is not a results.csv (expected columns {RESULTS_COLUMNS})")
    order: list[str] = []
    curves: dict[str, tuple[list[float], list[float]]] = {}
    try:
        for row in rows:
            label = row["variant"]
            if label not in curves:
                curves[label] = ([], [])
                order.append(label)
            curves[label][0].append(float(row["grid_value"]))
            curves[label][1].append(float(row["mean_snr_db"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"malformed row in {path}: {exc}") from exc
    return order, curves


def cmd_plot(args) -> int:
    order, curves = _read_results(args.results)
    series = [(label, curves[label][0], curves[label][1]) for label in order]

    xs = series[0][1]
    if args.logx == "yes":
        logx = True
    elif args.logx == "no":
        logx = False
    else:  # auto: log for wide positive grids such as gamma sweeps
        logx = min(xs) > 0 and max(xs) / min(xs) >= 100.0

    regions = None
    if args.highlight is not None:
        if args.highlight not in curves:
            raise UsageError(f"variant {args.highlight!r} not present in {args.results}")
        if BASELINE_LABEL not in curves:
            raise UsageError(f"no {BASELINE_LABEL!r} curve to compare against in {args.results}")
        gx, gy = curves[args.highlight]
        bx, by = curves[BASELINE_LABEL]
        if gx != bx:
            raise UsageError("highlight and baseline grids differ")
        regions = []
        for j, x in enumerate(gx):
            if not (math.isfinite(gy[j]) and math.isfinite(by[j])) or gy[j] < by[j]:
                continue
            lo = gx[j - 1] if j > 0 else x
            hi = gx[j + 1] if j + 1 < len(gx) else x
            regions.append(((x + lo) / 2.0, (x + hi) / 2.0))

    svg = line_chart_svg(
        series,
        xlabel="grid value",
        ylabel="mean SNR (dB)",
        logx=logx,
        regions=regions,
    )
    try:
        Path(args.out).write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmnrec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a single instance file")
    p_solve.add_argument("--instance", required=True, help="JSON with A (row-major), y, sigma_n")
    p_solve.add_argument("--params", required=True, help="JSON with norm-range and solver knobs")
    p_solve.add_argument("--out", required=True, help="output directory")
    p_solve.set_defaults(func=cmd_solve)

    p_exp = sub.add_parser("experiment", help="run an experiment config")
    p_exp.add_argument("--config", required=True, help="JSON experiment config")
    p_exp.add_argument("--out", required=True, help="output directory")
    p_exp.add_argument("--workers", type=int, default=None, help=f"default ${WORKERS_ENV} or 1")
    p_exp.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p_exp.set_defaults(func=cmd_experiment)

    p_plot = sub.add_parser("plot", help="render results.csv to SVG")
    p_plot.add_argument("--results", required=True, help="results.csv from the experiment command")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--highlight", default=None, help="shade grid points where this variant beats the baseline")
    p_plot.add_argument("--logx", choices=("auto", "yes", "no"), default="auto")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors itself
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SolverDivergenceError as exc:
        print(f"solver diagnostic: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
