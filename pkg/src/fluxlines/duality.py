"""Dual-side certification objects.

``evaluate_hbar`` is the convex node-potential functional: the least energy
level at which the potentials are sqrt(2)-Lipschitz with respect to the
level's geodesic distance.  ``eval_h_quadratic`` is the quadratic form of
the assembled measure whose gradient at the scaled transport duals must
reproduce the flux vector exactly.
"""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .geodesics import GeodesicEngine
from .measure import OptimalMeasure
from .model import ProblemSpec

__all__ = ["evaluate_hbar", "eval_h_quadratic"]

SQRT2 = math.sqrt(2.0)


def evaluate_hbar(
    spec: ProblemSpec,
    phi,
    engine: Optional[GeodesicEngine] = None,
    bisection_tol: Optional[float] = None,
) -> float:
    """Least E >= sup V with max_{i != j} |phi_i - phi_j| / D_E(x_i, x_j) <= sqrt(2).

    Feasibility is monotone in E (distances grow with E), so a doubling
    bracket plus bisection suffices.  Constant potentials are feasible at
    every level and return sup V exactly.  The result carries the bisection
    tolerance (default: the energy tolerance) as its accuracy.
    """
    engine = engine or GeodesicEngine.for_spec(spec)
    phi = np.asarray(phi, dtype=float)
    n = spec.sources_sinks.n
    if phi.shape != (n,):
        raise ValueError(f"phi must have one entry per problem point ({n}), got {phi.shape}")
    v_sup = spec.v_sup
    if float(np.ptp(phi)) == 0.0:
        return v_sup

    tol = bisection_tol if bisection_tol is not None else spec.energy_tol
    gaps = np.abs(phi[:, None] - phi[None, :])

    def feasible(E: float) -> bool:
        table, _ = engine.all_pairs_table(E)
        mask = ~np.eye(n, dtype=bool)
        return bool(np.all(gaps[mask] <= SQRT2 * table[mask]))

    lo = v_sup + spec.energy_tol
    if feasible(lo):
        return lo

    hi = max(2.0 * lo, v_sup + 1.0)
    while not feasible(hi):
        hi = v_sup + 2.0 * (hi - v_sup)
        if hi > 1e2 * spec.energy_bracket_cap:  # pragma: no cover - distances grow like sqrt(E)
            raise RuntimeError("no feasible energy level found")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def eval_h_quadratic(
    spec: ProblemSpec, zeta, measure: OptimalMeasure
) -> tuple[float, np.ndarray]:
    """Quadratic form of the assembled measure and its gradient.

    value = 1/2 sum_ij w_ij (zeta_i - zeta_j)^2 / (D_ij T_ij) + integral V dmu
    grad_k = sum over arcs at k of w (zeta_k - zeta_other) / (D T)

    At zeta = sqrt(2) * (transport duals) the gradient equals the flux
    vector and the value equals the energy level.
    """
    zeta = np.asarray(zeta, dtype=float)
    n = spec.sources_sinks.n
    if zeta.shape != (n,):
        raise ValueError(f"zeta must have one entry per problem point ({n}), got {zeta.shape}")

    value = 0.0
    grad = np.zeros(n)
    v_total = 0.0
    for arc in measure.arcs:
        dz = zeta[arc.i] - zeta[arc.j]
        denom = arc.path.D * arc.path.T
        value += 0.5 * arc.weight * dz * dz / denom
        grad[arc.i] += arc.weight * dz / denom
        grad[arc.j] -= arc.weight * dz / denom
        v_total += arc.weight * arc.v_integral
    if measure.point_mass is not None:
        v_total += measure.point_mass[0] * spec.v_sup
    return value + v_total, grad
