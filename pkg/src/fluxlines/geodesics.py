"""Energy-level geodesic distances, paths, and times of flight.

Distances are measured in the travel-cost metric whose line density is
sqrt(E - V): the zero-potential mode evaluates them in closed form in any
dimension, while the grid mode solves the eikonal equation
|grad u| = sqrt(E - V) on a planar lattice by first-order fast marching
and backtracks paths by steepest descent through the arrival field.

Arrival fields for distinct (source, energy) pairs are independent; every
field is immutable once marched, so callers may compute them concurrently.
"""
from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np

from . import fmm
from .errors import BoundaryContact, DescentStall, EnergyTooLow, SingularIntegrand
from .model import ProblemSpec, eval_potential_many

__all__ = [
    "Grid",
    "ArrivalField",
    "GeodesicPath",
    "GeodesicEngine",
    "AnalyticEngine",
    "GridEngine",
    "solve_eikonal",
    "distance",
    "extract_path",
    "time_of_flight",
    "time_of_flight_derivative",
    "distance_derivative_check",
    "eikonal_residual",
    "resolved_quadrature_step",
]

SEED_RADIUS_CELLS = 4.0  # exact-initialization disk around the source, in cells
SEED_QUAD_SAMPLES = 33


def resolved_quadrature_step(spec: ProblemSpec) -> float:
    """Arc-length sample spacing for path quadratures."""
    if spec.tolerances.quadrature_step is not None:
        return spec.tolerances.quadrature_step
    if spec.analytic_mode:
        scale = float(spec.sources_sinks.pairwise_distances().max())
        return max(scale, 1e-30) / 2048.0
    lo, hi = spec.domain_box
    h = float(np.min((hi - lo) / spec.grid_resolution))
    return 0.5 * h


@dataclass(frozen=True)
class Grid:
    """Regular node lattice over the domain box (nodes include the corners)."""

    lo: np.ndarray
    hi: np.ndarray
    shape: tuple[int, int]
    h: tuple[float, float]

    @classmethod
    def from_spec(cls, spec: ProblemSpec) -> "Grid":
        lo, hi = spec.domain_box
        if lo.shape[0] != 2:
            raise ValueError("grid mode requires planar (k=2) problems")
        res = spec.grid_resolution
        h = tuple(float(x) for x in (hi - lo) / res)
        return cls(lo=lo, hi=hi, shape=(res + 1, res + 1), h=h)

    def axis_nodes(self, d: int) -> np.ndarray:
        return self.lo[d] + self.h[d] * np.arange(self.shape[d])

    def node_mesh(self) -> np.ndarray:
        """(n0, n1, 2) world coordinates of all nodes."""
        x0, x1 = np.meshgrid(self.axis_nodes(0), self.axis_nodes(1), indexing="ij")
        return np.stack([x0, x1], axis=-1)

    def interp(self, values: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of a node field at world points (m, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        frac = (pts - self.lo) / np.asarray(self.h)
        out_shape = values.shape[2:] if values.ndim > 2 else ()
        n0, n1 = self.shape
        f0 = np.clip(frac[:, 0], 0.0, n0 - 1 - 1e-12)
        f1 = np.clip(frac[:, 1], 0.0, n1 - 1 - 1e-12)
        i0 = f0.astype(int)
        i1 = f1.astype(int)
        w0 = (f0 - i0).reshape((-1,) + (1,) * len(out_shape))
        w1 = (f1 - i1).reshape((-1,) + (1,) * len(out_shape))
        v00 = values[i0, i1]
        v10 = values[i0 + 1, i1]
        v01 = values[i0, i1 + 1]
        v11 = values[i0 + 1, i1 + 1]
        res = (
            v00 * (1 - w0) * (1 - w1)
            + v10 * w0 * (1 - w1)
            + v01 * (1 - w0) * w1
            + v11 * w0 * w1
        )
        return res if pts.shape[0] > 1 or out_shape else res[0]


@dataclass(frozen=True)
class ArrivalField:
    """Marched arrival values u(x) ~ distance from one source at one energy."""

    grid: Grid
    u: np.ndarray
    order: np.ndarray
    source_point: np.ndarray
    source_index: int
    energy: float
    seed_mask: np.ndarray  # nodes initialized exactly (excluded from residual checks)
    boundary_min: float  # smallest arrival value on the box edge

    def value_at(self, pts) -> np.ndarray:
        return self.grid.interp(self.u, pts)

    def gradient_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        g0 = np.gradient(self.u, self.grid.h[0], axis=0)
        g1 = np.gradient(self.u, self.grid.h[1], axis=1)
        return g0, g1


@dataclass(frozen=True)
class GeodesicPath:
    """Minimizing curve between problem points i and j at energy E.

    ``polyline`` runs from x_i to x_j in (approximately uniform) Euclidean
    arc-length order; ``S`` is its chord length, ``D`` the travel-cost
    distance, ``T`` the time of flight.
    """

    i: int
    j: int
    polyline: np.ndarray
    S: float
    D: float
    T: float
    E: float

    def arc_positions(self) -> np.ndarray:
        """Cumulative chord length of the polyline vertices."""
        if len(self.polyline) < 2:
            return np.zeros(len(self.polyline))
        seg = np.linalg.norm(np.diff(self.polyline, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(seg)])


def _segment_metric_values(spec: ProblemSpec, a: np.ndarray, b: np.ndarray, E: float):
    """sqrt(E - V) sampled on straight segments a->b; used to seed the march."""
    ts = np.linspace(0.0, 1.0, SEED_QUAD_SAMPLES)
    pts = a[:, None, :] + ts[None, :, None] * (b - a)[:, None, :]
    v = eval_potential_many(spec.potential, pts)
    return np.sqrt(np.maximum(E - v, 0.0)), ts


def solve_eikonal(spec: ProblemSpec, source_index: int, E: float) -> ArrivalField:
    """March |grad u| = sqrt(E - V) outward from one problem point.

    A disk of radius ``SEED_RADIUS_CELLS`` cells around the source is
    initialized with exact straight-segment quadrature values; this removes
    the point-source singularity that otherwise degrades the first-order
    scheme's convergence.
    """
    v_sup = spec.v_sup
    if E < v_sup + 0.5 * spec.energy_tol:
        raise EnergyTooLow(
            f"E = {E:.6g} does not exceed sup V = {v_sup:.6g} by the energy tolerance"
        )
    grid = Grid.from_spec(spec)
    src = spec.sources_sinks.points[source_index]

    mesh = grid.node_mesh()
    v_nodes = eval_potential_many(spec.potential, mesh)
    f = np.sqrt(np.maximum(E - v_nodes, 0.0))

    r_seed = SEED_RADIUS_CELLS * max(grid.h)
    dist_to_src = np.linalg.norm(mesh - src, axis=-1)
    seed_mask = dist_to_src <= r_seed
    si, sj = np.nonzero(seed_mask)
    seed_pts = mesh[si, sj]
    fvals, ts = _segment_metric_values(spec, np.repeat(src[None, :], len(seed_pts), 0), seed_pts, E)
    lengths = np.linalg.norm(seed_pts - src, axis=1)
    seed_u = np.trapezoid(fvals, ts, axis=1) * lengths

    u, order = fmm.march(f, grid.h[0], grid.h[1], si.astype(np.int64), sj.astype(np.int64), seed_u)

    boundary = np.concatenate([u[0, :], u[-1, :], u[:, 0], u[:, -1]])
    return ArrivalField(
        grid=grid,
        u=u,
        order=order,
        source_point=src,
        source_index=source_index,
        energy=E,
        seed_mask=seed_mask,
        boundary_min=float(boundary.min()),
    )


def eikonal_residual(spec: ProblemSpec, field: ArrivalField) -> float:
    """Max relative defect of the discrete upwind equation |grad u| = f,
    skipping the exactly-seeded disk and the outermost node ring."""
    grid = field.grid
    u = field.u
    mesh = grid.node_mesh()
    f = np.sqrt(np.maximum(field.energy - eval_potential_many(spec.potential, mesh), 0.0))

    d0m = (u[1:-1, 1:-1] - u[:-2, 1:-1]) / grid.h[0]
    d0p = (u[2:, 1:-1] - u[1:-1, 1:-1]) / grid.h[0]
    d1m = (u[1:-1, 1:-1] - u[1:-1, :-2]) / grid.h[1]
    d1p = (u[1:-1, 2:] - u[1:-1, 1:-1]) / grid.h[1]
    g0 = np.maximum(np.maximum(d0m, -d0p), 0.0)
    g1 = np.maximum(np.maximum(d1m, -d1p), 0.0)
    approx = np.sqrt(g0**2 + g1**2)
    fc = f[1:-1, 1:-1]
    rel = np.abs(approx - fc) / np.maximum(fc, 1e-300)
    rel[field.seed_mask[1:-1, 1:-1]] = 0.0
    return float(rel.max())


def extract_path(
    spec: ProblemSpec, field: ArrivalField, target, target_index: int = -1
) -> GeodesicPath:
    """Backtrack from ``target`` to the field's source by steepest descent,
    then resample to uniform Euclidean arc length."""
    grid = field.grid
    src = field.source_point
    target = np.asarray(target, dtype=float)
    qstep = resolved_quadrature_step(spec)

    if np.linalg.norm(target - src) == 0.0:
        poly = np.array([src])
        return GeodesicPath(
            i=field.source_index, j=target_index, polyline=poly, S=0.0,
            D=0.0, T=0.0, E=field.energy,
        )

    u_t = float(field.value_at(target))
    if u_t > field.boundary_min + _boundary_return_cost(spec, field, target):
        warnings.warn(
            "arrival front reached the box edge before the target; the geodesic "
            "may be clipped by the domain box",
            BoundaryContact,
        )

    g0, g1 = field.gradient_arrays()
    gstack = np.stack([g0, g1], axis=-1)

    def descent_dir(x):
        g = grid.interp(gstack, x[None, :])[0]
        norm = float(np.linalg.norm(g))
        if norm < 1e-300:
            return None
        return -g / norm

    h_min = min(grid.h)
    h_max = max(grid.h)
    stop_r = 1.5 * h_max
    step0 = 0.5 * h_min
    max_steps = int(40 * np.linalg.norm(grid.hi - grid.lo) / step0)

    pts = [target]
    x = target.copy()
    u_cur = u_t
    for _ in range(max_steps):
        if np.linalg.norm(x - src) <= stop_r:
            break
        step = step0
        accepted = False
        for _ in range(6):
            d = descent_dir(x)
            if d is None:
                break
            x_half = np.clip(x + step * d, grid.lo, grid.hi)
            d2 = descent_dir(x_half)
            x_new = np.clip(x + step * (d + (d2 if d2 is not None else d)) / 2.0, grid.lo, grid.hi)
            u_new = float(field.value_at(x_new))
            if u_new < u_cur - 1e-14:
                x, u_cur = x_new, u_new
                pts.append(x.copy())
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if np.linalg.norm(x - src) <= 3.0 * h_max:
                break  # inside the seeded disk; finish with the straight closing segment
            raise DescentStall(
                f"descent stalled at {x.tolist()} with u = {u_cur:.6g} "
                f"(target u = {u_t:.6g})"
            )
    else:
        raise DescentStall("descent exceeded the step budget without reaching the source")

    pts.append(src.copy())
    poly = np.array(pts[::-1])  # source -> target order
    poly, S = _resample_uniform(poly, qstep)
    return GeodesicPath(
        i=field.source_index, j=target_index, polyline=poly, S=S,
        D=u_t, T=np.nan, E=field.energy,
    )


def _boundary_return_cost(spec: ProblemSpec, field: ArrivalField, target) -> float:
    """Lower bound on the travel cost from the box edge back to the target.

    A geodesic can leave the box profitably only if
    u(target) > min boundary arrival + this return cost, so adding it keeps
    the clipping warning rigorous while silencing front-shape false alarms.
    """
    lo, hi = field.grid.lo, field.grid.hi
    target = np.asarray(target, dtype=float)
    gap = float(np.min(np.concatenate([target - lo, hi - target])))
    return gap * math.sqrt(max(field.energy - spec.v_sup, 0.0))


def _resample_uniform(poly: np.ndarray, step: float) -> tuple[np.ndarray, float]:
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    keep = np.concatenate([[True], seg > 1e-300])
    poly = poly[keep]
    if len(poly) < 2:
        return poly, 0.0
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(s[-1])
    n = max(2, int(np.ceil(total / step)) + 1)
    s_new = np.linspace(0.0, total, n)
    resampled = np.column_stack(
        [np.interp(s_new, s, poly[:, d]) for d in range(poly.shape[1])]
    )
    resampled[0] = poly[0]
    resampled[-1] = poly[-1]
    seg_new = np.linalg.norm(np.diff(resampled, axis=0), axis=1)
    return resampled, float(seg_new.sum())


def time_of_flight(spec: ProblemSpec, path: GeodesicPath, E: float) -> float:
    """Trapezoid quadrature of (E - V)^(-1/2) along the path."""
    if len(path.polyline) < 2:
        return 0.0
    s = path.arc_positions()
    v = eval_potential_many(spec.potential, path.polyline)
    gap = E - v
    if np.any(gap <= 0.0):
        raise SingularIntegrand(
            f"E - V <= 0 on the path (min gap {float(gap.min()):.6g}); "
            "the time-of-flight integrand is singular"
        )
    return float(np.trapezoid(1.0 / np.sqrt(gap), s))


def time_of_flight_derivative(spec: ProblemSpec, path: GeodesicPath, E: float) -> float:
    """d/dE of the fixed-path time integral: -1/2 * integral (E-V)^(-3/2)."""
    if len(path.polyline) < 2:
        return 0.0
    s = path.arc_positions()
    v = eval_potential_many(spec.potential, path.polyline)
    gap = E - v
    if np.any(gap <= 0.0):
        raise SingularIntegrand("E - V <= 0 on the path")
    return float(-0.5 * np.trapezoid(gap ** (-1.5), s))


def path_cost_integral(spec: ProblemSpec, path: GeodesicPath, E: float) -> float:
    """Travel-cost length of the polyline: integral of sqrt(E - V) ds."""
    if len(path.polyline) < 2:
        return 0.0
    s = path.arc_positions()
    v = eval_potential_many(spec.potential, path.polyline)
    return float(np.trapezoid(np.sqrt(np.maximum(E - v, 0.0)), s))


class GeodesicEngine:
    """Facade over the analytic and grid distance backends."""

    @staticmethod
    def for_spec(spec: ProblemSpec) -> "GeodesicEngine":
        if spec.analytic_mode:
            return AnalyticEngine(spec)
        return GridEngine(spec)

    # --- interface -------------------------------------------------------
    @property
    def mode(self) -> str:
        raise NotImplementedError

    def distance(self, i: int, j: int, E: float) -> float:
        raise NotImplementedError

    def distance_matrix(self, E: float, rows, cols) -> np.ndarray:
        return np.array([[self.distance(i, j, E) for j in cols] for i in rows])

    def all_pairs_table(self, E: float) -> tuple[np.ndarray, float]:
        """Symmetrized n x n distance table and its raw asymmetry defect."""
        n = self.spec.sources_sinks.n
        raw = self.distance_matrix(E, range(n), range(n))
        defect = float(np.max(np.abs(raw - raw.T)))
        table = 0.5 * (raw + raw.T)
        np.fill_diagonal(table, 0.0)
        return table, defect

    def path(self, i: int, j: int, E: float) -> GeodesicPath:
        raise NotImplementedError


class AnalyticEngine(GeodesicEngine):
    """Closed-form backend for the zero potential: D = sqrt(E) * |x_i - x_j|,
    straight-segment geodesics, T = |x_i - x_j| / sqrt(E).  Valid in any
    dimension and for any E > 0."""

    def __init__(self, spec: ProblemSpec):
        if not spec.analytic_mode:
            raise ValueError("analytic backend requires the zero potential")
        self.spec = spec
        self._lengths = spec.sources_sinks.pairwise_distances()
        self._geometry: dict[tuple[int, int], tuple[np.ndarray, float]] = {}

    @property
    def mode(self) -> str:
        return "analytic"

    def distance(self, i, j, E):
        return float(np.sqrt(E) * self._lengths[i, j])

    def distance_matrix(self, E, rows, cols):
        return np.sqrt(E) * self._lengths[np.ix_(list(rows), list(cols))]

    def _segment(self, i, j):
        # straight segments are energy-independent; build each pair once
        key = (i, j)
        if key not in self._geometry:
            pts = self.spec.sources_sinks.points
            length = self._lengths[i, j]
            qstep = resolved_quadrature_step(self.spec)
            n = max(2, int(np.ceil(length / qstep)) + 1)
            ts = np.linspace(0.0, 1.0, n)
            poly = pts[i][None, :] + ts[:, None] * (pts[j] - pts[i])[None, :]
            self._geometry[key] = (poly, float(length))
        return self._geometry[key]

    def path(self, i, j, E):
        poly, length = self._segment(i, j)
        sqrt_e = np.sqrt(E)
        return GeodesicPath(
            i=i, j=j, polyline=poly, S=length,
            D=float(sqrt_e * length), T=float(length / sqrt_e), E=E,
        )


class GridEngine(GeodesicEngine):
    """Fast-marching backend for planar problems with a nonzero potential.

    Arrival fields are cached per (source index, energy); the cache is an
    LRU bounded by ``field_cache_size`` since a 2048^2 field is ~34 MB.
    """

    def __init__(self, spec: ProblemSpec, field_cache_size: int = 48):
        self.spec = spec
        self._fields: OrderedDict[tuple[int, float], ArrivalField] = OrderedDict()
        self._paths: dict[tuple[int, int, float], GeodesicPath] = {}
        self._cache_size = field_cache_size

    @property
    def mode(self) -> str:
        return "grid"

    def field(self, i: int, E: float) -> ArrivalField:
        key = (i, float(E))
        if key in self._fields:
            self._fields.move_to_end(key)
            return self._fields[key]
        fld = solve_eikonal(self.spec, i, E)
        self._fields[key] = fld
        if len(self._fields) > self._cache_size:
            self._fields.popitem(last=False)
        return fld

    def distance(self, i, j, E):
        if i == j:
            return 0.0
        fld = self.field(i, E)
        target = self.spec.sources_sinks.points[j]
        d = float(fld.value_at(target))
        if d > fld.boundary_min + _boundary_return_cost(self.spec, fld, target):
            warnings.warn(
                f"arrival front from point {i} reached the box edge before point {j}; "
                "the geodesic may be clipped",
                BoundaryContact,
            )
        return d

    def distance_matrix(self, E, rows, cols):
        pts = self.spec.sources_sinks.points
        out = np.empty((len(list(rows)), len(list(cols))))
        rows = list(rows)
        cols = list(cols)
        for a, i in enumerate(rows):
            fld = self.field(i, E)
            vals = fld.value_at(pts[cols])
            out[a] = np.atleast_1d(vals)
            for b, j in enumerate(cols):
                if i == j:
                    out[a, b] = 0.0
        return out

    def path(self, i, j, E):
        key = (i, j, float(E))
        if key not in self._paths:
            fld = self.field(i, E)
            target = self.spec.sources_sinks.points[j]
            p = extract_path(self.spec, fld, target, target_index=j)
            p = replace(p, T=time_of_flight(self.spec, p, E))
            self._paths[key] = p
        return self._paths[key]


def distance(spec: ProblemSpec, i: int, j: int, E: float, engine=None) -> float:
    engine = engine or GeodesicEngine.for_spec(spec)
    return engine.distance(i, j, E)


def distance_derivative_check(
    spec: ProblemSpec, i: int, j: int, E: float, h: float, engine=None
) -> float:
    """Relative defect of the identity dD/dE = T/2, with the derivative from
    central differences of the distance backend and T from path quadrature."""
    engine = engine or GeodesicEngine.for_spec(spec)
    if E - h <= spec.v_sup:
        raise EnergyTooLow(f"E - h = {E - h:.6g} must exceed sup V = {spec.v_sup:.6g}")
    d_plus = engine.distance(i, j, E + h)
    d_minus = engine.distance(i, j, E - h)
    deriv = (d_plus - d_minus) / (2.0 * h)
    half_t = 0.5 * engine.path(i, j, E).T
    return abs(deriv - half_t) / abs(half_t)
