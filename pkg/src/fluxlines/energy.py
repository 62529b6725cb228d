"""Energy-level line search: maximize g(E) = sqrt(2) * W_E - E over E >= sup V.

The primary root-find runs on the stationarity signal
h(E) = sum_ij A_ij T_ij(E) - sqrt(2), which is the exact derivative signal
of g (dD/dE = T/2 gives g'(E) = h(E)/sqrt(2)).  h is nonincreasing because
g is concave; a golden-section fallback on g guards against numerical
non-monotonicity.  After bracketing, a plan-frozen Newton polish on the
fixed extracted paths drives |h| to ~1e-12 so the downstream measure mass
is exact well beyond the 1e-3 stationarity certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import BracketFailure
from .geodesics import (
    GeodesicEngine,
    GeodesicPath,
    time_of_flight,
    time_of_flight_derivative,
)
from .model import ProblemSpec
from .transport import CostMatrix, DualPotentials, TransportPlan, solve_transport

__all__ = [
    "EnergySample",
    "EnergyScan",
    "StationarityResidual",
    "EnergySolution",
    "objective",
    "stationarity_residual",
    "optimize_energy",
    "scan_energy",
]

SQRT2 = math.sqrt(2.0)
POLISH_TARGET = 1e-12  # |h| goal of the Newton polish (relative to sqrt(2))


@dataclass(frozen=True)
class EnergySample:
    E: float
    W: float
    g: float
    sum_AT: float


@dataclass(frozen=True)
class EnergyScan:
    samples: tuple[EnergySample, ...]
    bracket: tuple[float, float]


@dataclass(frozen=True)
class StationarityResidual:
    """h(E) = sum A T - sqrt(2), plus the interval spanned by plans taken
    just below and just above E (relevant when the optimum plan is not
    unique at E)."""

    h: float
    h_minus: float
    h_plus: float
    zero_in_hull: bool


@dataclass(frozen=True)
class EnergySolution:
    case: str  # "A" (E0 > sup V) or "B" (E0 = sup V)
    E0: float
    eval_energy: float  # energy the plan/paths were evaluated at (V-sup side-stepped in case B)
    J: float
    plan: TransportPlan
    duals: DualPotentials
    cost: CostMatrix
    paths: tuple[GeodesicPath, ...]  # one per support pair, same order as plan.support
    sum_AT: float
    stationarity_defect: float  # |sum AT - sqrt(2)| in case A; 0 target not required in case B


def _marginals(spec: ProblemSpec):
    ss = spec.sources_sinks
    src = ss.source_indices
    snk = ss.sink_indices
    return src, snk, ss.fluxes[src], -ss.fluxes[snk]


def _cost_rectangle(spec: ProblemSpec, engine: GeodesicEngine, E: float) -> CostMatrix:
    src, snk, _, _ = _marginals(spec)
    entries = engine.distance_matrix(E, src, snk)
    return CostMatrix(entries=entries, source_ids=src, sink_ids=snk)


def _cost_full(spec: ProblemSpec, engine: GeodesicEngine, E: float) -> CostMatrix:
    src, snk, _, _ = _marginals(spec)
    table, _ = engine.all_pairs_table(E)
    return CostMatrix(
        entries=table[np.ix_(src, snk)], source_ids=src, sink_ids=snk, all_pairs=table
    )


def objective(
    spec: ProblemSpec, E: float, engine: Optional[GeodesicEngine] = None, full_table: bool = False
) -> tuple[float, TransportPlan, DualPotentials]:
    """g(E) = sqrt(2) * W_E - E together with the optimal plan and duals."""
    engine = engine or GeodesicEngine.for_spec(spec)
    cost = _cost_full(spec, engine, E) if full_table else _cost_rectangle(spec, engine, E)
    src, snk, a, b = _marginals(spec)
    plan, duals = solve_transport(cost, a, b)
    return SQRT2 * plan.W - E, plan, duals


def _support_paths(spec, engine, plan: TransportPlan, E: float):
    src, snk, _, _ = _marginals(spec)
    return tuple(engine.path(src[i], snk[j], E) for i, j in plan.support)


def _sum_AT(plan: TransportPlan, paths, E: float, spec: ProblemSpec) -> float:
    total = 0.0
    for (i, j), path in zip(plan.support, paths):
        t = path.T if path.E == E else time_of_flight(spec, path, E)
        total += plan.A[i, j] * t
    return total


def stationarity_residual(
    spec: ProblemSpec,
    E: float,
    engine: Optional[GeodesicEngine] = None,
    delta: Optional[float] = None,
) -> StationarityResidual:
    """h(E) from the plan at E, bracketed by plans from E -/+ delta.

    All three use times of flight at E itself; the side plans matter only
    when the transport optimum is not unique at E, in which case the convex
    hull of [h_minus, h_plus] containing zero reproduces the mixed-plan
    stationarity construction.
    """
    engine = engine or GeodesicEngine.for_spec(spec)
    if delta is None:
        delta = max(1e-6 * (E - spec.v_sup), 2.0 * spec.energy_tol)

    def h_for(plan):
        paths = _support_paths(spec, engine, plan, E)
        return _sum_AT(plan, paths, E, spec) - SQRT2

    _, plan, _ = objective(spec, E, engine)
    h = h_for(plan)
    _, plan_minus, _ = objective(spec, max(E - delta, spec.v_sup + 0.5 * spec.energy_tol), engine)
    _, plan_plus, _ = objective(spec, E + delta, engine)
    h_minus = h_for(plan_minus)
    h_plus = h_for(plan_plus)
    lo, hi = min(h_minus, h_plus), max(h_minus, h_plus)
    return StationarityResidual(h=h, h_minus=h_minus, h_plus=h_plus, zero_in_hull=lo <= 0.0 <= hi)


def _newton_frozen(spec, plan, paths, E_init, E_floor):
    """Solve sum A T(E) = sqrt(2) on frozen paths; T(E) is analytic and
    strictly decreasing there, so Newton converges fast."""
    E = E_init
    src, snk, _, _ = _marginals(spec)
    A = [plan.A[i, j] for i, j in plan.support]
    for _ in range(60):
        s = 0.0
        ds = 0.0
        for a_ij, path in zip(A, paths):
            s += a_ij * time_of_flight(spec, path, E)
            ds += a_ij * time_of_flight_derivative(spec, path, E)
        h = s - SQRT2
        if abs(h) <= POLISH_TARGET:
            return E, h
        if ds == 0.0:
            break
        E_new = E - h / ds
        if not np.isfinite(E_new) or E_new <= E_floor:
            E_new = 0.5 * (E + E_floor)
        if abs(E_new - E) <= 1e-16 * max(1.0, abs(E)):
            return E_new, h
        E = E_new
    return E, h


def _golden_section_max(fun, lo, hi, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def optimize_energy(
    spec: ProblemSpec, engine: Optional[GeodesicEngine] = None
) -> EnergySolution:
    """Locate the optimal energy level and classify the solution case.

    Case B (E0 pinned at sup V) is declared when h <= 0 already at
    sup V + energy_tol; otherwise the root of h is bracketed by doubling,
    narrowed by bisection, and polished on frozen plans/paths.
    """
    engine = engine or GeodesicEngine.for_spec(spec)
    v_sup = spec.v_sup
    tol_E = spec.energy_tol
    E_start = v_sup + tol_E

    def h_at(E):
        _, plan, _ = objective(spec, E, engine)
        paths = _support_paths(spec, engine, plan, E)
        return _sum_AT(plan, paths, E, spec) - SQRT2, plan, paths

    h_start, plan_start, _ = h_at(E_start)
    if h_start <= 0.0:
        return _finalize(spec, engine, "B", E_start, v_sup)

    # --- bracket by doubling the excess over sup V ------------------------
    excess = max(1.0, v_sup)
    samples = [(E_start, h_start)]
    E_hi = None
    while True:
        E_try = v_sup + excess
        if E_try > spec.energy_bracket_cap:
            raise BracketFailure(
                f"h(E) still positive at the bracket cap {spec.energy_bracket_cap:.3g}"
            )
        h_try, _, _ = h_at(E_try)
        samples.append((E_try, h_try))
        if h_try <= 0.0:
            E_hi = E_try
            break
        excess *= 2.0

    monotone = all(
        h2 <= h1 + 1e-9 * (1.0 + abs(h1))
        for (e1, h1), (e2, h2) in zip(samples, samples[1:])
        if e2 > e1
    )

    E_lo = max(e for e, h in samples if h > 0.0)
    E_lo_h = next(h for e, h in samples if e == E_lo)

    if not monotone:
        # noisy derivative signal: fall back to a value-only search on g
        def g_of(E):
            g, _, _ = objective(spec, E, engine)
            return g

        E_center = _golden_section_max(g_of, E_start, E_hi, tol_E)
    else:
        # --- bisection on h ----------------------------------------------
        lo, hi = E_lo, E_hi
        h_lo = E_lo_h
        while hi - lo > max(tol_E, 1e-12 * hi):
            mid = 0.5 * (lo + hi)
            h_mid, _, _ = h_at(mid)
            if h_mid > 0.0:
                lo, h_lo = mid, h_mid
            else:
                hi = mid
        E_center = 0.5 * (lo + hi)

    return _finalize(spec, engine, "A", E_center, v_sup)


def _finalize(spec, engine, case, E_eval, v_sup) -> EnergySolution:
    src, snk, a, b = _marginals(spec)

    E_floor = v_sup + 0.1 * spec.energy_tol

    if case == "A":
        # plan-frozen polish cycle: refresh plan and paths at each new E
        E_cur = E_eval
        support_prev = None
        for _ in range(10):
            _, plan, _ = objective(spec, E_cur, engine)
            paths = _support_paths(spec, engine, plan, E_cur)
            E_new, _ = _newton_frozen(spec, plan, paths, E_cur, E_floor)
            converged = abs(E_new - E_cur) <= 1e-13 * max(1.0, abs(E_new))
            E_cur = E_new
            if converged and support_prev == plan.support:
                break
            support_prev = plan.support
        E0 = E_cur
    else:
        E0 = E_eval

    cost = _cost_full(spec, engine, E0)
    plan, duals = solve_transport(cost, a, b)
    paths = _support_paths(spec, engine, plan, E0)

    if case == "A":
        # the delivered artifacts must satisfy sum A T = sqrt(2) themselves:
        # solve once more on the final (frozen) paths and evaluate their
        # times at that root, absorbing the re-extraction jitter
        E0, _ = _newton_frozen(spec, plan, paths, E0, E_floor)
        paths = tuple(
            replace(p, T=time_of_flight(spec, p, E0), E=E0) for p in paths
        )
    sum_AT = sum(
        plan.A[li, lj] * p.T for (li, lj), p in zip(plan.support, paths)
    )

    if case == "A" and abs(sum_AT - SQRT2) > 1e-9:
        # plan not unique at E0: mix the one-sided plans so that h vanishes
        mixed = _alpha_mix(spec, engine, cost, a, b, E0, sum_AT, plan)
        if mixed is not None:
            plan, paths, sum_AT = mixed

    W = float(np.sum(plan.A * cost.entries))
    E_report = v_sup if case == "B" else E0
    J = SQRT2 * W - E_report
    defect = abs(sum_AT - SQRT2) if case == "A" else 0.0
    # carry the plan's own cost entries as the paths' distances so that every
    # downstream identity (action, quadratic form, slackness) telescopes
    # against the same numbers W was built from
    paths = tuple(
        replace(p, D=float(cost.entries[li, lj]))
        for (li, lj), p in zip(plan.support, paths)
    )
    return EnergySolution(
        case=case,
        E0=E_report,
        eval_energy=E0,
        J=J,
        plan=TransportPlan(A=plan.A, W=W, support=plan.support),
        duals=duals,
        cost=cost,
        paths=paths,
        sum_AT=sum_AT,
        stationarity_defect=defect,
    )


def _alpha_mix(spec, engine, cost, a, b, E0, h_base_plus_sqrt2, base_plan):
    """Convex combination of the plans taken just below/above E0 chosen so
    that sum A T(E0) = sqrt(2) exactly."""
    delta = max(10.0 * spec.energy_tol, 1e-9 * E0)
    _, plan_m, _ = objective(spec, max(E0 - delta, spec.v_sup + 0.5 * spec.energy_tol), engine)
    _, plan_p, _ = objective(spec, E0 + delta, engine)

    def sum_at(plan):
        paths = _support_paths(spec, engine, plan, E0)
        return _sum_AT(plan, paths, E0, spec)

    h_m = sum_at(plan_m) - SQRT2
    h_p = sum_at(plan_p) - SQRT2
    if not (min(h_m, h_p) <= 0.0 <= max(h_m, h_p)) or h_m == h_p:
        return None
    alpha = h_p / (h_p - h_m)
    A = alpha * plan_m.A + (1.0 - alpha) * plan_p.A
    W = float(np.sum(A * cost.entries))
    support = tuple(
        (i, j) for i in range(A.shape[0]) for j in range(A.shape[1]) if A[i, j] > 0.0
    )
    plan = TransportPlan(A=A, W=W, support=support)
    paths = _support_paths(spec, engine, plan, E0)
    return plan, paths, _sum_AT(plan, paths, E0, spec)


def scan_energy(spec: ProblemSpec, energies, engine: Optional[GeodesicEngine] = None) -> EnergyScan:
    """Sample (E, W, g, sum AT) along an energy range (for external plots)."""
    engine = engine or GeodesicEngine.for_spec(spec)
    samples = []
    for E in energies:
        g, plan, _ = objective(spec, E, engine)
        paths = _support_paths(spec, engine, plan, E)
        samples.append(
            EnergySample(E=float(E), W=plan.W, g=g, sum_AT=_sum_AT(plan, paths, E, spec))
        )
    return EnergyScan(samples=tuple(samples), bracket=(float(min(energies)), float(max(energies))))
