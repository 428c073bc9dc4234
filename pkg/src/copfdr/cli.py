"""Command-line surface for the package.

Four subcommands:

* ``copfdr bounds`` — single bound report as JSON.
* ``copfdr curve`` — parameter sweep as CSV (FDR simulation and/or
  bound columns over an ``eta`` grid).
* ``copfdr estimate`` — fit ``eta`` to a data file by the realized
  copula method, JSON output.
* ``copfdr test`` — run the step-up test on user p-values, optionally
  at the calibrated level ``q'``.

Every output embeds a run manifest (command, parameters, seed, tool
version, wall time); CSV outputs carry it as ``#``-prefixed comment
lines.  Reruns with the same flags and inputs are byte-identical apart
from ``wall_time_ms``.

Exit codes: 0 success, 1 numerical failure, 2 usage or input error.

Environment: ``COPFDR_THREADS`` caps the curve worker count (0 or unset
= auto).  Output goes to ``--out`` when given, stdout otherwise.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dataclass_fields
from typing import Optional, Sequence

import numpy as np

from . import __version__
from ._rng import RngStream
from .bounds import BoundReport, calibrate_q, sharper_upper_bound
from .config import SimulationConfig
from .copula import CopulaModel, PValueSample
from .estimation import kendall_tau_sample, realized_copula_fit
from .lsu import lsu_reject, simulate_fdr

__all__ = ["main"]

_FAMILIES = ("independence", "clayton", "gumbel")
_METRIC_GROUPS = ("fdr", "bounds", "fz", "sd")
_CSV_COLUMNS = (
    "eta",
    "fdr_sim",
    "fdr_sim_sd",
    "lower",
    "classical_upper",
    "sharper_upper",
    "gamma_min",
    "z_star",
    "fz_at_zstar",
    "bound_sd_per_draw",
)
# which metric groups switch each column on (eta is unconditional)
_COLUMN_GROUPS = {
    "fdr_sim": ("fdr",),
    "fdr_sim_sd": ("fdr", "sd"),
    "lower": ("bounds",),
    "classical_upper": ("bounds",),
    "sharper_upper": ("bounds",),
    "gamma_min": ("bounds",),
    "z_star": ("fz",),
    "fz_at_zstar": ("fz",),
    "bound_sd_per_draw": ("sd",),
}
_DEFAULT_DRAWS = 100_000
_DEFAULT_REPS = 100_000
_FAST_PRESET = 1_000


class _UsageError(ValueError):
    """Flag/input problem -> exit code 2."""


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copfdr",
        description="FDR bounds and simulation for the step-up test "
        "under Archimedean dependence.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    bounds = sub.add_parser("bounds", help="single bound report as JSON")
    bounds.add_argument("--family", required=True, choices=_FAMILIES)
    bounds.add_argument("--eta", type=float, default=None)
    bounds.add_argument("--m", type=int, required=True)
    bounds.add_argument("--m0", type=int, required=True)
    bounds.add_argument("--q", type=float, required=True)
    bounds.add_argument("--draws", type=int, default=_DEFAULT_DRAWS)
    bounds.add_argument("--seed", type=int, default=0)
    bounds.add_argument("--out", default=None)

    curve = sub.add_parser("curve", help="eta sweep as CSV")
    curve.add_argument("--family", required=True, choices=_FAMILIES)
    curve.add_argument(
        "--eta-grid",
        default=None,
        help="start:stop:step, endpoint-inclusive when it lands within 1e-9; "
        "optional for independence (single row)",
    )
    curve.add_argument("--m", type=int, required=True)
    curve.add_argument("--m0", type=int, required=True)
    curve.add_argument("--q", type=float, required=True)
    curve.add_argument("--reps", type=int, default=None)
    curve.add_argument("--draws", type=int, default=None)
    curve.add_argument(
        "--fast",
        action="store_true",
        help=f"smoke preset: {_FAST_PRESET} reps and draws unless given explicitly",
    )
    curve.add_argument(
        "--metrics",
        default=",".join(_METRIC_GROUPS),
        help="comma list from {fdr,bounds,fz,sd}",
    )
    curve.add_argument("--seed", type=int, default=0)
    curve.add_argument("--out", default=None)

    estimate = sub.add_parser("estimate", help="fit eta to a data CSV")
    estimate.add_argument("--data", required=True)
    estimate.add_argument(
        "--header", action="store_true", help="first CSV row is a header"
    )
    estimate.add_argument("--family", required=True, choices=("clayton", "gumbel"))
    estimate.add_argument("--seed", type=int, default=0)
    estimate.add_argument("--out", default=None)

    test = sub.add_parser("test", help="step-up test on a p-value file")
    test.add_argument("--pvalues", required=True, help="CSV, one p-value per line")
    test.add_argument("--q", type=float, required=True)
    test.add_argument("--family", default=None, choices=_FAMILIES)
    test.add_argument("--eta", type=float, default=None)
    test.add_argument(
        "--eta-from", default=None, help="data CSV to fit eta from (see estimate)"
    )
    test.add_argument(
        "--header", action="store_true", help="first row of --eta-from is a header"
    )
    test.add_argument("--adjust", action="store_true", help="test at calibrated q'")
    test.add_argument("--m0-assumed", type=int, default=None)
    test.add_argument("--draws", type=int, default=_DEFAULT_DRAWS)
    test.add_argument("--tol", type=float, default=1e-4)
    test.add_argument("--seed", type=int, default=0)
    test.add_argument("--out", default=None)
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _parse_grid(spec: str) -> list[float]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise _UsageError(f"--eta-grid must be start:stop:step, got {spec!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"--eta-grid must be numeric start:stop:step, got {spec!r}")
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise _UsageError("--eta-grid values must be finite")
    if step <= 0.0:
        raise _UsageError("--eta-grid step must be positive")
    if stop < start - 1e-9:
        raise _UsageError("--eta-grid stop must be >= start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [start + i * step for i in range(count)]
    if abs(values[-1] - stop) <= 1e-9:
        values[-1] = stop
    return values


def _parse_metrics(spec: str) -> frozenset[str]:
    groups = frozenset(token.strip() for token in spec.split(",") if token.strip())
    if not groups:
        raise _UsageError("--metrics must select at least one group")
    unknown = groups - frozenset(_METRIC_GROUPS)
    if unknown:
        raise _UsageError(
            f"unknown metrics {sorted(unknown)}; choose from {list(_METRIC_GROUPS)}"
        )
    return groups


def _worker_count(n_tasks: int) -> int:
    raw = os.environ.get("COPFDR_THREADS", "0")
    try:
        configured = int(raw)
    except ValueError:
        raise _UsageError(f"COPFDR_THREADS must be an integer, got {raw!r}")
    if configured <= 0:
        configured = os.cpu_count() or 1
    return max(1, min(configured, n_tasks))


def _model_from(family: str, eta: Optional[float]) -> CopulaModel:
    return CopulaModel(family, eta)


def _read_data_matrix(path: str, header: bool) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")
    rows: list[list[float]] = []
    width: Optional[int] = None
    for lineno, line in enumerate(lines, start=1):
        if header and lineno == 1:
            continue
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = [token.strip() for token in stripped.split(",")]
        try:
            row = [float(token) for token in tokens]
        except ValueError:
            raise _UsageError(f"malformed CSV at line {lineno} of {path}: {stripped!r}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise _UsageError(
                f"malformed CSV at line {lineno} of {path}: "
                f"expected {width} columns, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise _UsageError(f"no data rows in {path}")
    return np.asarray(rows, dtype=float)


def _read_pvalues(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")
    values: list[float] = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            value = float(stripped)
        except ValueError:
            raise _UsageError(
                f"malformed p-value at line {lineno} of {path}: {stripped!r}"
            )
        if not 0.0 <= value <= 1.0:
            raise _UsageError(f"p-value outside [0, 1] at line {lineno} of {path}")
        values.append(value)
    if not values:
        raise _UsageError(f"no p-values in {path}")
    return np.asarray(values)


def _manifest(command: str, parameters: dict, seed: int, wall_ms: int) -> dict:
    return {
        "command": command,
        "parameters": parameters,
        "seed": int(seed),
        "tool_version": __version__,
        "wall_time_ms": int(wall_ms),
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as handle:
            handle.write(text)


def _json_payload(payload: dict) -> str:
    return json.dumps(payload, indent=2, allow_nan=True) + "\n"


def _fmt(value: float) -> str:
    return repr(float(value))


def _report_dict(report: BoundReport) -> dict:
    out = {}
    for field in dataclass_fields(BoundReport):
        value = getattr(report, field.name)
        out[field.name] = int(value) if field.name == "mc_draws" else float(value)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_bounds(args: argparse.Namespace, started: float) -> int:
    model = _model_from(args.family, args.eta)
    report = sharper_upper_bound(
        model, args.m, args.m0, args.q, args.draws, RngStream(args.seed, (101, 0))
    )
    parameters = {
        "family": args.family,
        "eta": model.eta,
        "m": args.m,
        "m0": args.m0,
        "q": args.q,
        "draws": args.draws,
    }
    wall_ms = int((time.perf_counter() - started) * 1000)
    payload = _report_dict(report)
    payload["manifest"] = _manifest("bounds", parameters, args.seed, wall_ms)
    _emit(_json_payload(payload), args.out)
    return 0


def _curve_point(
    grid_index: int,
    eta: Optional[float],
    args: argparse.Namespace,
    need_bounds: bool,
    need_sim: bool,
    reps: int,
    draws: int,
) -> dict:
    model = _model_from(args.family, eta)
    row: dict = {"eta": model.eta if model.eta is not None else 1.0}
    if need_bounds:
        report = sharper_upper_bound(
            model,
            args.m,
            args.m0,
            args.q,
            draws,
            RngStream(args.seed, (101, grid_index)),
        )
        row.update(_report_dict(report))
    if need_sim:
        cfg = SimulationConfig(
            m=args.m,
            m0=args.m0,
            q=args.q,
            replications=reps,
            mc_draws=draws,
            seed=RngStream(args.seed, (102, grid_index)).derived_seed(),
        )
        estimate = simulate_fdr(model, cfg)
        row["fdr_sim"] = estimate.mean_fdp
        row["fdr_sim_sd"] = estimate.sd_fdp
    return row


def _cmd_curve(args: argparse.Namespace, started: float) -> int:
    groups = _parse_metrics(args.metrics)
    columns = ["eta"] + [
        c for c in _CSV_COLUMNS[1:] if groups.intersection(_COLUMN_GROUPS[c])
    ]
    need_sim = bool(groups & {"fdr", "sd"})
    need_bounds = bool(groups & {"bounds", "fz", "sd"})
    reps = args.reps if args.reps is not None else (_FAST_PRESET if args.fast else _DEFAULT_REPS)
    draws = args.draws if args.draws is not None else (_FAST_PRESET if args.fast else _DEFAULT_DRAWS)

    if args.family == "independence":
        grid: list[Optional[float]] = (
            list(_parse_grid(args.eta_grid)) if args.eta_grid else [None]
        )
    else:
        if not args.eta_grid:
            raise _UsageError(f"--eta-grid is required for family {args.family!r}")
        grid = list(_parse_grid(args.eta_grid))

    def point(grid_index: int) -> dict:
        return _curve_point(
            grid_index, grid[grid_index], args, need_bounds, need_sim, reps, draws
        )

    workers = _worker_count(len(grid))
    if workers == 1 or len(grid) == 1:
        rows = [point(i) for i in range(len(grid))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, range(len(grid))))

    parameters = {
        "family": args.family,
        "eta_grid": args.eta_grid,
        "m": args.m,
        "m0": args.m0,
        "q": args.q,
        "reps": reps,
        "draws": draws,
        "metrics": ",".join(g for g in _METRIC_GROUPS if g in groups),
    }
    wall_ms = int((time.perf_counter() - started) * 1000)
    manifest = _manifest("curve", parameters, args.seed, wall_ms)
    lines = [
        f"# command: {manifest['command']}",
        f"# parameters: {json.dumps(parameters, sort_keys=True)}",
        f"# seed: {manifest['seed']}",
        f"# tool_version: {manifest['tool_version']}",
        f"# wall_time_ms: {manifest['wall_time_ms']}",
        ",".join(columns),
    ]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_estimate(args: argparse.Namespace, started: float) -> int:
    data = _read_data_matrix(args.data, args.header)
    estimate = kendall_tau_sample(data)
    fit = realized_copula_fit(estimate, args.family)
    parameters = {"data": args.data, "family": args.family, "header": args.header}
    wall_ms = int((time.perf_counter() - started) * 1000)
    payload = {
        "eta_hat": fit.eta_hat,
        "family": fit.family.value,
        "mean_tau": fit.mean_tau,
        "objective": fit.objective,
        "clamped": fit.clamped,
        "n": int(data.shape[0]),
        "m": int(data.shape[1]),
        "manifest": _manifest("estimate", parameters, args.seed, wall_ms),
    }
    _emit(_json_payload(payload), args.out)
    return 0


def _cmd_test(args: argparse.Namespace, started: float) -> int:
    values = _read_pvalues(args.pvalues)
    m = values.size
    if args.adjust and args.family is None:
        raise _UsageError("--adjust requires --family")
    if args.eta is not None and args.eta_from is not None:
        raise _UsageError("--eta and --eta-from are mutually exclusive")

    eta_used: Optional[float] = None
    model: Optional[CopulaModel] = None
    if args.family is not None:
        if args.family == "independence":
            model = CopulaModel("independence")
        elif args.eta_from is not None:
            data = _read_data_matrix(args.eta_from, args.header)
            fit = realized_copula_fit(kendall_tau_sample(data), args.family)
            model = CopulaModel(args.family, fit.eta_hat)
        elif args.eta is not None:
            model = CopulaModel(args.family, args.eta)
        else:
            raise _UsageError(f"--family {args.family} requires --eta or --eta-from")
        eta_used = model.eta

    m0_assumed = args.m0_assumed if args.m0_assumed is not None else m
    if not 0 <= m0_assumed <= m:
        raise _UsageError(f"--m0-assumed must lie in [0, {m}]")

    q_used = args.q
    report_payload = None
    if args.adjust:
        assert model is not None
        stream = RngStream(args.seed, (103,))
        q_used = calibrate_q(model, m, m0_assumed, args.q, args.draws, stream, args.tol)
        report = sharper_upper_bound(model, m, m0_assumed, q_used, args.draws, stream)
        report_payload = _report_dict(report)

    sample = PValueSample(values=values, null_mask=np.zeros(m, dtype=bool))
    outcome = lsu_reject(sample, q_used)

    parameters = {
        "pvalues": args.pvalues,
        "q": args.q,
        "family": args.family,
        "eta": args.eta,
        "eta_from": args.eta_from,
        "adjust": args.adjust,
        "m0_assumed": m0_assumed,
        "draws": args.draws,
        "tol": args.tol,
    }
    wall_ms = int((time.perf_counter() - started) * 1000)
    payload = {
        "k": int(outcome.k),
        "rejected": [int(i) + 1 for i in outcome.rejected],
        "q_used": float(q_used),
        "eta_used": eta_used,
        "family": args.family,
        "m": int(m),
        "m0_assumed": int(m0_assumed),
        "adjusted": bool(args.adjust),
        "bound_report": report_payload,
        "manifest": _manifest("test", parameters, args.seed, wall_ms),
    }
    _emit(_json_payload(payload), args.out)
    return 0


_DISPATCH = {
    "bounds": _cmd_bounds,
    "curve": _cmd_curve,
    "estimate": _cmd_estimate,
    "test": _cmd_test,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    started = time.perf_counter()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and flag errors
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args, started)
    except ValueError as exc:  # includes _UsageError and domain validation
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
