"""Config ingestion and result emission.

Configs are TOML with [points], [potential], [solver], and [run] sections;
``parse_config(emit_config(cfg))`` round-trips exactly.  Structured results
go to JSON, tabular data to CSV with 17-significant-digit scientific
notation so downstream comparisons are bit-stable.  All writes are atomic
(write-temp-then-rename).
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from .diagnostics import DiagnosticsReport
from .energy import EnergyScan, EnergySolution
from .errors import ConfigError
from .measure import OptimalMeasure
from .model import (
    GaussianBump,
    PotentialSpec,
    ProblemSpec,
    SourceSinkSet,
    Tolerances,
)

__all__ = [
    "RunConfig",
    "parse_config",
    "parse_config_text",
    "emit_config",
    "atomic_write",
    "write_solution",
    "write_diagnostics",
    "write_plan_csv",
    "write_arcs_csv",
    "write_scan_csv",
    "write_distances_csv",
    "write_fields_csv",
]

FMT = "%.16e"  # 17 significant digits


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Parsed run configuration: a problem plus emission options."""

    problem: ProblemSpec
    output_dir: str = "."
    emit_paths: bool = True
    emit_fields: bool = False
    random_seed: int = 0
    energy_scan_range: Optional[tuple[float, float]] = None
    command: Optional[str] = field(default=None, compare=False)

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        a, b = self.problem, other.problem
        return (
            np.array_equal(a.sources_sinks.points, b.sources_sinks.points)
            and np.array_equal(a.sources_sinks.fluxes, b.sources_sinks.fluxes)
            and a.potential == b.potential
            and np.array_equal(a.domain_box[0], b.domain_box[0])
            and np.array_equal(a.domain_box[1], b.domain_box[1])
            and a.grid_resolution == b.grid_resolution
            and a.tolerances == b.tolerances
            and a.energy_bracket_cap == b.energy_bracket_cap
            and self.output_dir == other.output_dir
            and self.emit_paths == other.emit_paths
            and self.emit_fields == other.emit_fields
            and self.random_seed == other.random_seed
            and self.energy_scan_range == other.energy_scan_range
        )


def _require(table: dict, key: str, section: str):
    if key not in table:
        raise ConfigError(f"[{section}] is missing required field '{key}'")
    return table[key]


def parse_config_text(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error: {exc}") from exc
    return _config_from_dict(data)


def parse_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def _config_from_dict(data: dict) -> RunConfig:
    pts_tab = data.get("points")
    if pts_tab is None:
        raise ConfigError("config is missing the [points] section")
    coords = _require(pts_tab, "coords", "points")
    flux = _require(pts_tab, "flux", "points")
    try:
        points = np.array(coords, dtype=float)
        fluxes = np.array(flux, dtype=float)
        sources_sinks = SourceSinkSet(points=points, fluxes=fluxes)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[points]: {exc}") from exc

    pot_tab = data.get("potential", {"kind": "zero"})
    kind = pot_tab.get("kind", "zero")
    if kind == "zero":
        potential = PotentialSpec.zero()
    elif kind == "gaussians":
        bumps = []
        for b_idx, b in enumerate(pot_tab.get("bumps", [])):
            try:
                bumps.append(
                    GaussianBump(
                        center=np.array(_require(b, "center", f"potential.bumps[{b_idx}]"), dtype=float),
                        height=float(_require(b, "height", f"potential.bumps[{b_idx}]")),
                        width=float(_require(b, "width", f"potential.bumps[{b_idx}]")),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"[potential.bumps[{b_idx}]]: {exc}") from exc
        if not bumps:
            raise ConfigError("[potential]: kind 'gaussians' requires at least one [[potential.bumps]]")
        potential = PotentialSpec.gaussians(bumps)
    else:
        raise ConfigError(f"[potential].kind: unknown variant {kind!r} (use 'zero' or 'gaussians')")

    sol_tab = data.get("solver", {})
    tol_kwargs = {}
    for name in ("lp_tol", "energy_tol", "eikonal_tol", "quadrature_step"):
        if name in sol_tab:
            tol_kwargs[name] = float(sol_tab[name])
    box = None
    if "domain_box" in sol_tab:
        try:
            raw_box = sol_tab["domain_box"]
            box = (np.array(raw_box[0], dtype=float), np.array(raw_box[1], dtype=float))
        except (ValueError, TypeError, IndexError) as exc:
            raise ConfigError(f"[solver].domain_box: {exc}") from exc
    try:
        problem = ProblemSpec(
            sources_sinks=sources_sinks,
            potential=potential,
            domain_box=box,
            grid_resolution=int(sol_tab.get("grid_resolution", 256)),
            tolerances=Tolerances(**tol_kwargs),
            energy_bracket_cap=float(sol_tab.get("energy_bracket_cap", 1e9)),
        )
    except ValueError as exc:
        raise ConfigError(f"[solver]: {exc}") from exc

    run_tab = data.get("run", {})
    scan = run_tab.get("energy_scan_range")
    if scan is not None:
        if len(scan) != 2:
            raise ConfigError("[run].energy_scan_range must be a [lo, hi] pair")
        scan = (float(scan[0]), float(scan[1]))
    return RunConfig(
        problem=problem,
        output_dir=str(run_tab.get("output_dir", ".")),
        emit_paths=bool(run_tab.get("emit_paths", True)),
        emit_fields=bool(run_tab.get("emit_fields", False)),
        random_seed=int(run_tab.get("random_seed", 0)),
        energy_scan_range=scan,
    )


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot emit {type(v)} as TOML")


def emit_config(config: RunConfig) -> str:
    """Serialize a RunConfig back to TOML (exact round-trip)."""
    p = config.problem
    lines = ["[points]"]
    lines.append(f"coords = {_toml_value(p.sources_sinks.points.tolist())}")
    lines.append(f"flux = {_toml_value(p.sources_sinks.fluxes.tolist())}")
    lines.append("")
    lines.append("[potential]")
    if p.potential.is_zero:
        lines.append('kind = "zero"')
    else:
        lines.append('kind = "gaussians"')
        for b in p.potential.bumps:
            lines.append("")
            lines.append("[[potential.bumps]]")
            lines.append(f"center = {_toml_value(b.center.tolist())}")
            lines.append(f"height = {_toml_value(b.height)}")
            lines.append(f"width = {_toml_value(b.width)}")
    lines.append("")
    lines.append("[solver]")
    lines.append(f"grid_resolution = {p.grid_resolution}")
    lines.append(f"domain_box = {_toml_value([p.domain_box[0].tolist(), p.domain_box[1].tolist()])}")
    t = p.tolerances
    lines.append(f"lp_tol = {_toml_value(t.lp_tol)}")
    if t.energy_tol is not None:
        lines.append(f"energy_tol = {_toml_value(t.energy_tol)}")
    lines.append(f"eikonal_tol = {_toml_value(t.eikonal_tol)}")
    if t.quadrature_step is not None:
        lines.append(f"quadrature_step = {_toml_value(t.quadrature_step)}")
    lines.append(f"energy_bracket_cap = {_toml_value(p.energy_bracket_cap)}")
    lines.append("")
    lines.append("[run]")
    lines.append(f"output_dir = {_toml_value(config.output_dir)}")
    lines.append(f"emit_paths = {_toml_value(config.emit_paths)}")
    lines.append(f"emit_fields = {_toml_value(config.emit_fields)}")
    lines.append(f"random_seed = {config.random_seed}")
    if config.energy_scan_range is not None:
        lines.append(f"energy_scan_range = {_toml_value(list(config.energy_scan_range))}")
    return "\n".join(lines) + "\n"


# --- output writers ---------------------------------------------------------


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"Object of type {type(o).__name__} is not JSON serializable")


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_solution(
    out_dir,
    spec: ProblemSpec,
    solution: EnergySolution,
    measure: Optional[OptimalMeasure] = None,
) -> Path:
    ss = spec.sources_sinks
    doc = {
        "case": solution.case,
        "E0": solution.E0,
        "eval_energy": solution.eval_energy,
        "J": solution.J,
        "W": solution.plan.W,
        "sum_AT": solution.sum_AT,
        "stationarity_defect": solution.stationarity_defect,
        "beta_pt": measure.beta_pt if measure is not None else None,
        "total_inflow": ss.total_inflow,
        "mode": "analytic" if spec.analytic_mode else "grid",
        "grid_resolution": spec.grid_resolution,
        "points": ss.points.tolist(),
        "fluxes": ss.fluxes.tolist(),
        "duals_phi": solution.duals.phi.tolist(),
        "plan": {
            "source_ids": solution.cost.source_ids.tolist(),
            "sink_ids": solution.cost.sink_ids.tolist(),
            "A": solution.plan.A.tolist(),
        },
        "arcs": [
            {
                "i": p.i,
                "j": p.j,
                "S": p.S,
                "D": p.D,
                "T": p.T,
            }
            for p in solution.paths
        ],
    }
    return atomic_write(Path(out_dir) / "solution.json", _json_dumps(doc))


def write_diagnostics(out_dir, report: DiagnosticsReport) -> Path:
    return atomic_write(Path(out_dir) / "diagnostics.json", _json_dumps(report.to_records()))


def write_plan_csv(out_dir, solution: EnergySolution) -> Path:
    lines = ["i,j,amount,distance,time,weight"]
    for (li, lj), path in zip(solution.plan.support, solution.paths):
        amount = solution.plan.A[li, lj]
        weight = amount * path.T / np.sqrt(2.0)
        lines.append(
            f"{path.i},{path.j},{FMT % amount},{FMT % path.D},{FMT % path.T},{FMT % weight}"
        )
    return atomic_write(Path(out_dir) / "plan.csv", "\n".join(lines) + "\n")


def write_arcs_csv(out_dir, measure: OptimalMeasure) -> Path:
    dim = measure.arcs[0].path.polyline.shape[1] if measure.arcs else 2
    cols = ",".join(f"x{d}" for d in range(dim))
    lines = [f"i,j,sample,s,{cols},rho"]
    for arc in measure.arcs:
        for k, (s, q, r) in enumerate(zip(arc.s, arc.path.polyline, arc.rho)):
            coords = ",".join(FMT % c for c in q)
            lines.append(f"{arc.i},{arc.j},{k},{FMT % s},{coords},{FMT % r}")
    if measure.point_mass is not None:
        beta, x0 = measure.point_mass
        coords = ",".join(FMT % c for c in x0)
        lines.append(f"-1,-1,0,{FMT % 0.0},{coords},{FMT % beta}")
    return atomic_write(Path(out_dir) / "arcs.csv", "\n".join(lines) + "\n")


def write_scan_csv(out_dir, scan: EnergyScan) -> Path:
    lines = ["E,W,g,sumAT"]
    for s in scan.samples:
        lines.append(f"{FMT % s.E},{FMT % s.W},{FMT % s.g},{FMT % s.sum_AT}")
    return atomic_write(Path(out_dir) / "scan.csv", "\n".join(lines) + "\n")


def write_distances_csv(out_dir, table: np.ndarray, asymmetry: float, E: float) -> Path:
    lines = [f"# symmetry defect: {FMT % asymmetry}", f"# energy: {FMT % E}"]
    for row in table:
        lines.append(",".join(FMT % v for v in row))
    return atomic_write(Path(out_dir) / "distances.csv", "\n".join(lines) + "\n")


def write_fields_csv(out_dir, source_index: int, u: np.ndarray) -> Path:
    lines = [",".join(FMT % v for v in row) for row in u]
    return atomic_write(
        Path(out_dir) / f"field_{source_index}.csv", "\n".join(lines) + "\n"
    )
