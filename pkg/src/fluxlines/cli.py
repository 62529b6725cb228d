"""Command-line interface: solve, scan-energy, distances.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.  Errors
are emitted as one structured JSON object on stderr; output files appear
only when the whole command succeeds.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .diagnostics import run_full_diagnostics
from .energy import optimize_energy, scan_energy
from .errors import ConfigError, FluxlinesError, NumericalError
from .geodesics import GeodesicEngine
from .io import (
    RunConfig,
    parse_config,
    write_arcs_csv,
    write_diagnostics,
    write_distances_csv,
    write_fields_csv,
    write_plan_csv,
    write_scan_csv,
    write_solution,
)
from .measure import assemble_measure
from .model import validate_problem

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxlines",
        description="Steady minimal-action flows between point sources and sinks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="TOML problem configuration")
        p.add_argument("--out", default=None, help="output directory (overrides [run].output_dir)")
        p.add_argument("--grid-res", type=int, default=None, help="grid resolution override")
        p.add_argument("--tol-lp", type=float, default=None)
        p.add_argument("--tol-energy", type=float, default=None)
        p.add_argument("--tol-eikonal", type=float, default=None)
        p.add_argument("--quadrature-step", type=float, default=None)

    p_solve = sub.add_parser("solve", help="full solve: energy level, plan, measure, diagnostics")
    add_common(p_solve)
    p_solve.add_argument("--no-orbits", action="store_true", help="skip the orbit cross-check")

    p_scan = sub.add_parser("scan-energy", help="sample E, W, g, and sum AT over an energy range")
    add_common(p_scan)
    p_scan.add_argument("--from", dest="e_from", type=float, default=None)
    p_scan.add_argument("--to", dest="e_to", type=float, default=None)
    p_scan.add_argument("--n", type=int, default=20, help="number of samples")
    p_scan.add_argument("--log", action="store_true", help="log-spaced samples")

    p_dist = sub.add_parser("distances", help="emit the full point-to-point distance table")
    add_common(p_dist)
    p_dist.add_argument("--energy", type=float, required=True)

    return parser


def _load(args) -> RunConfig:
    config = parse_config(args.config)
    problem = config.problem
    overrides = {}
    if args.grid_res is not None:
        overrides["grid_resolution"] = args.grid_res
    tol_over = {}
    if args.tol_lp is not None:
        tol_over["lp_tol"] = args.tol_lp
    if args.tol_energy is not None:
        tol_over["energy_tol"] = args.tol_energy
    if args.tol_eikonal is not None:
        tol_over["eikonal_tol"] = args.tol_eikonal
    if args.quadrature_step is not None:
        tol_over["quadrature_step"] = args.quadrature_step
    if tol_over:
        overrides["tolerances"] = dataclasses.replace(problem.tolerances, **tol_over)
    if overrides:
        problem = dataclasses.replace(problem, **overrides)
    out_dir = args.out if args.out is not None else config.output_dir
    return dataclasses.replace(
        config, problem=problem, output_dir=out_dir, command=args.command
    )


def _validate_or_fail(problem) -> None:
    report = validate_problem(problem)
    if not report.ok:
        raise ConfigError("invalid problem: " + "; ".join(report.violations))


def cmd_solve(config: RunConfig, shoot_arcs: bool = True) -> list[Path]:
    _validate_or_fail(config.problem)
    spec = config.problem
    engine = GeodesicEngine.for_spec(spec)
    solution = optimize_energy(spec, engine=engine)
    measure = assemble_measure(spec, solution)
    report = run_full_diagnostics(spec, solution, measure, engine=engine, shoot_arcs=shoot_arcs)

    out = Path(config.output_dir)
    written = [
        write_solution(out, spec, solution, measure),
        write_diagnostics(out, report),
        write_plan_csv(out, solution),
    ]
    if config.emit_paths:
        written.append(write_arcs_csv(out, measure))
    if config.emit_fields and not spec.analytic_mode:
        for idx in sorted({p.i for p in solution.paths}):
            written.append(write_fields_csv(out, idx, engine.field(idx, solution.eval_energy).u))
    return written


def cmd_scan_energy(config: RunConfig, e_from, e_to, n: int, log: bool) -> list[Path]:
    _validate_or_fail(config.problem)
    spec = config.problem
    if e_from is None or e_to is None:
        if config.energy_scan_range is None:
            raise ConfigError("scan range missing: pass --from/--to or set [run].energy_scan_range")
        e_from, e_to = config.energy_scan_range
    if not (e_to > e_from):
        raise ConfigError(f"empty energy range [{e_from}, {e_to}]")
    floor = spec.v_sup + spec.energy_tol
    if e_from < floor:
        raise ConfigError(
            f"scan range starts at {e_from}, below the evaluable floor sup V + tol = {floor:.6g}"
        )
    if n < 1:
        raise ConfigError("--n must be positive")
    if log:
        energies = np.geomspace(e_from, e_to, n)
    else:
        energies = np.linspace(e_from, e_to, n)
    scan = scan_energy(spec, energies)
    return [write_scan_csv(Path(config.output_dir), scan)]


def cmd_distances(config: RunConfig, E: float) -> list[Path]:
    _validate_or_fail(config.problem)
    spec = config.problem
    engine = GeodesicEngine.for_spec(spec)
    table, asym = engine.all_pairs_table(E)
    return [write_distances_csv(Path(config.output_dir), table, asym, E)]


def _fail(kind: str, exc: Exception, written: list[Path]) -> int:
    for path in written:
        try:
            path.unlink(missing_ok=True)
        except OSError:  # pragma: no cover
            pass
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return EXIT_CONFIG if kind == "config" else EXIT_NUMERIC


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    written: list[Path] = []
    try:
        config = _load(args)
        if args.command == "solve":
            written = cmd_solve(config, shoot_arcs=not args.no_orbits)
        elif args.command == "scan-energy":
            written = cmd_scan_energy(config, args.e_from, args.e_to, args.n, args.log)
        elif args.command == "distances":
            written = cmd_distances(config, args.energy)
    except ConfigError as exc:
        return _fail("config", exc, written)
    except NumericalError as exc:
        return _fail("numeric", exc, written)
    except FluxlinesError as exc:  # remaining package errors are numeric-stage
        return _fail("numeric", exc, written)
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
