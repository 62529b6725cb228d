"""Optimal measure: arc densities, weights, mass, action, time/flux."""
import math

import numpy as np
import pytest

from conftest import (
    analytic_2x2_spec,
    analytic_pair_spec,
    bump_case_a_spec,
    bump_case_b_spec,
    multi_bump_spec,
    random_analytic_spec,
)
from fluxlines.energy import optimize_energy
from fluxlines.geodesics import GeodesicEngine
from fluxlines.measure import (
    action_direct,
    assemble_measure,
    build_density,
    time_flux_expectation,
)
from fluxlines.model import eval_potential_many

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def pair_solution():
    spec = analytic_pair_spec()
    sol = optimize_energy(spec)
    return spec, sol, assemble_measure(spec, sol)


@pytest.fixture(scope="module")
def bump_solution():
    spec = bump_case_a_spec(resolution=160)
    eng = GeodesicEngine.for_spec(spec)
    sol = optimize_energy(spec, engine=eng)
    return spec, sol, assemble_measure(spec, sol)


@pytest.fixture(scope="module")
def case_b_solution():
    spec = bump_case_b_spec(resolution=128)
    sol = optimize_energy(spec)
    return spec, sol, assemble_measure(spec, sol)


class TestDensity:
    def test_uniform_for_zero_potential(self, pair_solution):
        spec, sol, mu = pair_solution
        arc = mu.arcs[0]
        # rho = 1/S exactly: S = 1 here
        assert np.max(np.abs(arc.rho - 1.0)) < 1e-12
        assert arc.raw_defect < 1e-12

    def test_uniform_value_is_inverse_length(self):
        spec = analytic_pair_spec(length=2.0)
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        assert np.max(np.abs(mu.arcs[0].rho - 0.5)) < 1e-12

    def test_integrates_to_one(self, bump_solution):
        spec, sol, mu = bump_solution
        for arc in mu.arcs:
            total = np.trapezoid(arc.rho, arc.s)
            assert total == pytest.approx(1.0, abs=1e-12)
            assert arc.raw_defect < 1e-6

    def test_density_larger_where_potential_larger(self, bump_solution):
        spec, sol, mu = bump_solution
        arc = mu.arcs[0]
        v = eval_potential_many(spec.potential, arc.path.polyline)
        assert np.argmax(arc.rho) == np.argmax(v)
        # rho ~ 1 / sqrt(E - V): exact pointwise proportionality
        expected = 1.0 / np.sqrt(mu.eval_energy - v)
        expected /= np.trapezoid(expected, arc.s)
        assert np.allclose(arc.rho, expected, rtol=1e-10)

    def test_singular_density_rejected(self, bump_solution):
        spec, sol, mu = bump_solution
        from fluxlines.errors import SingularDensity

        path = sol.paths[0]
        v_max = float(eval_potential_many(spec.potential, path.polyline).max())
        with pytest.raises(SingularDensity):
            build_density(spec, path, 0.5 * v_max)  # below V somewhere on the path


class TestAssembly:
    def test_single_pair_unit_weight(self, pair_solution):
        spec, sol, mu = pair_solution
        # stationarity forces w = 2^(-1/2) * A * T = 1
        assert len(mu.arcs) == 1
        assert mu.arcs[0].weight == pytest.approx(1.0, abs=1e-12)
        assert mu.point_mass is None
        assert mu.total_mass == pytest.approx(1.0, abs=1e-12)

    def test_zero_amount_pairs_have_no_arc(self):
        spec = analytic_2x2_spec()
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        assert len(mu.arcs) == 2  # diagonal plan: the cross pairs carry nothing
        carrying = {(a.i, a.j) for a in mu.arcs}
        assert carrying == {(0, 2), (1, 3)}

    def test_case_b_point_mass(self, case_b_solution):
        spec, sol, mu = case_b_solution
        assert mu.case == "B"
        beta, x0 = mu.point_mass
        assert beta == pytest.approx(1.0 - sol.sum_AT / SQRT2, abs=1e-15)
        assert 0.99 < beta < 1.0
        assert np.allclose(x0, [0.5, 0.5], atol=1e-6)  # the bump peak
        assert mu.total_mass == pytest.approx(1.0, abs=1e-12)

    def test_mass_one_in_both_cases(self, bump_solution, case_b_solution):
        for _, _, mu in (bump_solution, case_b_solution):
            assert abs(mu.total_mass - 1.0) <= 1e-9

    def test_mass_defect_raised_on_broken_stationarity(self, pair_solution):
        from dataclasses import replace

        from fluxlines.errors import MassDefect
        from fluxlines.transport import TransportPlan

        spec, sol, _ = pair_solution
        halved = TransportPlan(
            A=0.5 * sol.plan.A, W=0.5 * sol.plan.W, support=sol.plan.support
        )
        with pytest.raises(MassDefect):
            assemble_measure(spec, replace(sol, plan=halved, case="A"))


class TestAction:
    def test_single_pair_closed_form(self, pair_solution):
        spec, sol, mu = pair_solution
        # w * (2 D / T - E0) = 1 * (2 sqrt(0.5)/sqrt(2) - 0.5) = 0.5
        assert action_direct(spec, mu) == pytest.approx(0.5, abs=1e-12)

    def test_2x2_matches_g(self):
        spec = analytic_2x2_spec()
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        assert action_direct(spec, mu) == pytest.approx(2.0, abs=1e-9)
        assert action_direct(spec, mu) == pytest.approx(sol.J, abs=1e-9)

    def test_matches_energy_objective_in_grid_mode(self, bump_solution):
        spec, sol, mu = bump_solution
        target = SQRT2 * sol.plan.W - sol.E0
        assert action_direct(spec, mu) == pytest.approx(target, rel=1e-3)

    def test_case_b_value(self, case_b_solution):
        spec, sol, mu = case_b_solution
        target = SQRT2 * sol.plan.W - spec.v_sup
        assert action_direct(spec, mu) == pytest.approx(target, rel=1e-3, abs=1e-9)


class TestTimeFlux:
    def test_single_pair(self, pair_solution):
        _, _, mu = pair_solution
        assert time_flux_expectation(mu) == pytest.approx(1.0 / SQRT2, abs=1e-12)

    def test_exact_on_random_instances(self, rng):
        for _ in range(10):
            spec = random_analytic_spec(rng)
            sol = optimize_energy(spec)
            mu = assemble_measure(spec, sol)
            lam = spec.sources_sinks.total_inflow
            assert abs(time_flux_expectation(mu) - lam / SQRT2) <= 1e-12 * lam

    def test_case_b_arcs_only(self, case_b_solution):
        spec, sol, mu = case_b_solution
        lam = spec.sources_sinks.total_inflow
        assert time_flux_expectation(mu) == pytest.approx(lam / SQRT2, rel=1e-12)

    def test_multi_instance(self):
        spec = multi_bump_spec(resolution=128)
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        lam = spec.sources_sinks.total_inflow
        assert time_flux_expectation(mu) == pytest.approx(lam / SQRT2, rel=1e-12)
