"""Problem definition: source/sink sets, potentials, tolerances, validation.

Everything here is immutable after construction and side-effect free, so
instances can be shared freely between concurrent solves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "GaussianBump",
    "PotentialSpec",
    "SourceSinkSet",
    "Tolerances",
    "ProblemSpec",
    "ValidationReport",
    "validate_problem",
    "eval_potential",
    "grad_potential",
    "potential_sup",
]

NET_FLUX_RTOL = 1e-12


def _as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"a point must be a 1-d coordinate sequence, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    p.flags.writeable = False
    return p


@dataclass(frozen=True, eq=False)
class GaussianBump:
    """One radial bump ``height * exp(-|x - center|^2 / width^2)``."""

    center: np.ndarray
    height: float
    width: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_point(self.center))
        if not (self.height > 0 and np.isfinite(self.height)):
            raise ValueError(f"bump height must be positive, got {self.height}")
        if not (self.width > 0 and np.isfinite(self.width)):
            raise ValueError(f"bump width must be positive, got {self.width}")

    def __eq__(self, other):
        if not isinstance(other, GaussianBump):
            return NotImplemented
        return (
            np.array_equal(self.center, other.center)
            and self.height == other.height
            and self.width == other.width
        )

    def __hash__(self):
        return hash((tuple(self.center), self.height, self.width))


@dataclass(frozen=True)
class PotentialSpec:
    """Smooth bounded potential vanishing at infinity.

    Supported variants: identically zero, or a finite sum of Gaussian bumps.
    Both are nonnegative with a finite, attained supremum.
    """

    bumps: tuple[GaussianBump, ...] = ()

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls(())

    @classmethod
    def gaussians(cls, bumps: Sequence[GaussianBump]) -> "PotentialSpec":
        return cls(tuple(bumps))

    @property
    def is_zero(self) -> bool:
        return len(self.bumps) == 0


def eval_potential(potential: PotentialSpec, x) -> float:
    """Evaluate V at a single point (closed form)."""
    if potential.is_zero:
        return 0.0
    x = np.asarray(x, dtype=float)
    total = 0.0
    for b in potential.bumps:
        d2 = float(np.sum((x - b.center) ** 2))
        total += b.height * np.exp(-d2 / b.width**2)
    return total


def eval_potential_many(potential: PotentialSpec, xs: np.ndarray) -> np.ndarray:
    """Vectorized V over an (m, k) array of points."""
    xs = np.asarray(xs, dtype=float)
    out = np.zeros(xs.shape[:-1])
    for b in potential.bumps:
        d2 = np.sum((xs - b.center) ** 2, axis=-1)
        out += b.height * np.exp(-d2 / b.width**2)
    return out


def grad_potential(potential: PotentialSpec, x) -> np.ndarray:
    """Gradient of V at a single point (closed form)."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for b in potential.bumps:
        diff = x - b.center
        d2 = float(np.sum(diff**2))
        g += b.height * np.exp(-d2 / b.width**2) * (-2.0 / b.width**2) * diff
    return g


def potential_sup(potential: PotentialSpec, dim: int = 2) -> tuple[float, np.ndarray]:
    """Supremum of V and a maximizer x0.

    For the zero potential returns ``(0, origin)`` by convention.  For bump
    sums the maximizer is located by a coarse scan over the bump hull
    (inflated by 3x the largest width) followed by a Nelder-Mead polish from
    every promising candidate; ties within 1e-9 relative resolve to the
    lexicographically smallest maximizer.
    """
    if potential.is_zero:
        return 0.0, np.zeros(dim)

    centers = np.array([b.center for b in potential.bumps])
    k = centers.shape[1]
    max_w = max(b.width for b in potential.bumps)
    lo = centers.min(axis=0) - 3.0 * max_w
    hi = centers.max(axis=0) + 3.0 * max_w

    candidates = [b.center for b in potential.bumps]
    if k <= 2:
        # coarse lattice over the inflated hull
        axes = [np.linspace(lo[d], hi[d], 41) for d in range(k)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
        vals = eval_potential_many(potential, mesh)
        order = np.argsort(vals)[::-1][:8]
        candidates.extend(mesh[i] for i in order)

    best: list[tuple[float, np.ndarray]] = []
    for x_start in candidates:
        res = minimize(
            lambda x: -eval_potential(potential, x),
            np.asarray(x_start, dtype=float),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 2000},
        )
        best.append((-res.fun, res.x))

    v_sup = max(v for v, _ in best)
    near = [x for v, x in best if v >= v_sup * (1.0 - 1e-9)]
    x0 = min(near, key=lambda x: tuple(x))
    return v_sup, np.asarray(x0, dtype=float)


@dataclass(frozen=True)
class SourceSinkSet:
    """Distinct points with prescribed fluxes; positive = source, negative = sink."""

    points: np.ndarray  # (n, k)
    fluxes: np.ndarray  # (n,)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be an (n, k) array, got shape {pts.shape}")
        fl = np.asarray(self.fluxes, dtype=float)
        if fl.shape != (pts.shape[0],):
            raise ValueError(
                f"fluxes must have one entry per point, got {fl.shape} for {pts.shape[0]} points"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        if not np.all(np.isfinite(fl)):
            raise ValueError("fluxes contain non-finite values")
        pts.flags.writeable = False
        fl.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "fluxes", fl)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def source_indices(self) -> np.ndarray:
        return np.flatnonzero(self.fluxes > 0)

    @property
    def sink_indices(self) -> np.ndarray:
        return np.flatnonzero(self.fluxes < 0)

    @property
    def total_inflow(self) -> float:
        """|lambda|: the total flux through the sources."""
        return float(self.fluxes[self.fluxes > 0].sum())

    def pairwise_distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt(np.sum(diff**2, axis=-1))


@dataclass(frozen=True)
class Tolerances:
    """Solver tolerances; ``None`` fields resolve to problem-scaled defaults."""

    lp_tol: float = 1e-9
    energy_tol: Optional[float] = None  # default: 1e-6 * (sup V + 1)
    eikonal_tol: float = 0.02
    quadrature_step: Optional[float] = None  # default: half a grid cell


@dataclass(frozen=True)
class ProblemSpec:
    """Complete description of one solve.

    ``domain_box`` is ``(lower, upper)`` corner arrays.  When omitted it is
    derived from the point cloud with padding equal to the largest pairwise
    point distance on every side, so geodesics that bow outward are not
    silently clipped.
    """

    sources_sinks: SourceSinkSet
    potential: PotentialSpec = field(default_factory=PotentialSpec.zero)
    domain_box: Optional[tuple[np.ndarray, np.ndarray]] = None
    grid_resolution: int = 256
    tolerances: Tolerances = field(default_factory=Tolerances)
    energy_bracket_cap: float = 1e9

    def __post_init__(self):
        if self.grid_resolution < 2:
            raise ValueError(f"grid_resolution must be >= 2, got {self.grid_resolution}")
        if self.domain_box is None:
            object.__setattr__(self, "domain_box", _auto_box(self.sources_sinks))
        else:
            lo = _as_point(self.domain_box[0])
            hi = _as_point(self.domain_box[1])
            if lo.shape != hi.shape or lo.shape[0] != self.sources_sinks.dim:
                raise ValueError("domain_box corners must match the point dimension")
            if not np.all(hi > lo):
                raise ValueError("domain_box upper corner must exceed lower corner")
            object.__setattr__(self, "domain_box", (lo, hi))

    @property
    def analytic_mode(self) -> bool:
        """Zero potential admits closed-form distances in any dimension."""
        return self.potential.is_zero

    @cached_property
    def potential_sup(self) -> tuple[float, np.ndarray]:
        return potential_sup(self.potential, dim=self.sources_sinks.dim)

    @property
    def v_sup(self) -> float:
        return self.potential_sup[0]

    @property
    def energy_tol(self) -> float:
        if self.tolerances.energy_tol is not None:
            return self.tolerances.energy_tol
        return 1e-6 * (self.v_sup + 1.0)


def _auto_box(sources_sinks: SourceSinkSet) -> tuple[np.ndarray, np.ndarray]:
    pts = sources_sinks.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = float(sources_sinks.pairwise_distances().max()) if sources_sinks.n > 1 else 1.0
    if pad == 0.0:
        pad = 1.0
    center = 0.5 * (lo + hi)
    half = float(np.max(hi - lo)) / 2.0 + pad
    lo_box = center - half
    hi_box = center + half
    lo_box.flags.writeable = False
    hi_box.flags.writeable = False
    return lo_box, hi_box


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_problem(spec: ProblemSpec) -> ValidationReport:
    """Check flux balance, point distinctness, box containment, and that
    both sources and sinks are present.  Violations are data, not errors.
    """
    ss = spec.sources_sinks
    violations: list[str] = []

    scale = float(np.max(np.abs(ss.fluxes))) if ss.n else 0.0
    net = float(ss.fluxes.sum())
    if scale == 0.0 or abs(net) > NET_FLUX_RTOL * scale:
        violations.append(f"net flux = {net:.6g}")

    if np.any(ss.fluxes == 0.0):
        idx = np.flatnonzero(ss.fluxes == 0.0)
        violations.append(f"zero flux at point index {idx.tolist()}")

    dists = ss.pairwise_distances()
    np.fill_diagonal(dists, np.inf)
    dup = np.argwhere(dists < 1e-12)
    if dup.size:
        i, j = dup[0]
        violations.append(f"duplicate points at indices {i} and {j}")

    if len(ss.source_indices) == 0:
        violations.append("no sources (every flux is <= 0)")
    if len(ss.sink_indices) == 0:
        violations.append("no sinks (every flux is >= 0)")

    lo, hi = spec.domain_box
    inside = np.all((ss.points >= lo) & (ss.points <= hi), axis=1)
    for i in np.flatnonzero(~inside):
        violations.append(f"point {i} at {ss.points[i].tolist()} outside domain box")

    return ValidationReport(ok=not violations, violations=tuple(violations))
