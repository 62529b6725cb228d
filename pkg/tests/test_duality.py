"""Dual-side objects: the energy-level functional of node potentials and
the quadratic form of the assembled measure."""
import math

import numpy as np
import pytest

from conftest import analytic_pair_spec, bump_case_a_spec, random_analytic_spec
from fluxlines.duality import eval_h_quadratic, evaluate_hbar
from fluxlines.energy import optimize_energy
from fluxlines.geodesics import GeodesicEngine
from fluxlines.measure import assemble_measure

SQRT2 = math.sqrt(2.0)


def hbar_closed_form_zero_potential(spec, phi):
    """For V = 0: the least feasible level is max over pairs of
    (phi_i - phi_j)^2 / (2 l_ij^2), clamped at 0."""
    pts = spec.sources_sinks.points
    phi = np.asarray(phi, dtype=float)
    lengths = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
    best = 0.0
    n = len(phi)
    for i in range(n):
        for j in range(n):
            if i != j:
                best = max(best, (phi[i] - phi[j]) ** 2 / (2.0 * lengths[i, j] ** 2))
    return best


class TestHbar:
    def test_two_node_closed_form(self):
        spec = analytic_pair_spec()
        # constraint |1 - 0| / (sqrt(E) * 1) <= sqrt(2)  =>  E >= 0.5
        assert evaluate_hbar(spec, [1.0, 0.0]) == pytest.approx(0.5, abs=2e-6)

    def test_constant_potentials_sit_at_v_sup(self):
        spec = analytic_pair_spec()
        assert evaluate_hbar(spec, [3.0, 3.0]) == 0.0
        bspec = bump_case_a_spec(resolution=96)
        assert evaluate_hbar(bspec, [1.0, 1.0]) == bspec.v_sup

    def test_bisection_matches_closed_form(self, rng):
        spec = random_analytic_spec(rng, n_max=4)
        eng = GeodesicEngine.for_spec(spec)
        for _ in range(15):
            phi = rng.uniform(-2.0, 2.0, size=spec.sources_sinks.n)
            got = evaluate_hbar(spec, phi, engine=eng)
            want = hbar_closed_form_zero_potential(spec, phi)
            assert got == pytest.approx(want, abs=3.0 * spec.energy_tol)

    def test_midpoint_convexity(self, rng):
        spec = analytic_pair_spec()
        eng = GeodesicEngine.for_spec(spec)
        tol = spec.energy_tol
        for _ in range(30):
            phi = rng.uniform(-2.0, 2.0, size=2)
            psi = rng.uniform(-2.0, 2.0, size=2)
            mid = evaluate_hbar(spec, (phi + psi) / 2.0, engine=eng)
            avg = 0.5 * (
                evaluate_hbar(spec, phi, engine=eng) + evaluate_hbar(spec, psi, engine=eng)
            )
            assert mid <= avg + 2.0 * tol

    def test_shift_invariance(self, rng):
        spec = analytic_pair_spec()
        phi = np.array([0.7, -0.3])
        a = evaluate_hbar(spec, phi)
        b = evaluate_hbar(spec, phi + 5.0)
        assert a == pytest.approx(b, abs=1e-12)

    def test_fenchel_attainment_analytic(self):
        spec = analytic_pair_spec()
        eng = GeodesicEngine.for_spec(spec)
        sol = optimize_energy(spec, engine=eng)
        phi_star = SQRT2 * sol.duals.phi
        hbar = evaluate_hbar(spec, phi_star, engine=eng)
        lam = spec.sources_sinks.fluxes
        assert float(np.dot(lam, phi_star)) - hbar == pytest.approx(sol.J, abs=1e-3)
        assert hbar <= sol.E0 + 2.0 * spec.energy_tol

    def test_fenchel_attainment_grid(self):
        spec = bump_case_a_spec(resolution=128)
        eng = GeodesicEngine.for_spec(spec)
        sol = optimize_energy(spec, engine=eng)
        phi_star = SQRT2 * sol.duals.phi
        hbar = evaluate_hbar(spec, phi_star, engine=eng)
        lam = spec.sources_sinks.fluxes
        assert float(np.dot(lam, phi_star)) - hbar == pytest.approx(sol.J, abs=1e-3)


@pytest.fixture(scope="module")
def pair():
    spec = analytic_pair_spec()
    sol = optimize_energy(spec)
    return spec, sol, assemble_measure(spec, sol)


class TestHQuadratic:

    def test_single_pair_closed_form(self, pair):
        spec, sol, mu = pair
        phi_star = SQRT2 * sol.duals.phi
        value, grad = eval_h_quadratic(spec, phi_star, mu)
        # value = D / T = E0 = 0.5; gradient = (1, -1) = fluxes
        assert value == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(grad, [1.0, -1.0], atol=1e-12)

    def test_constant_zeta(self, pair):
        spec, sol, mu = pair
        value, grad = eval_h_quadratic(spec, np.full(2, 1.7), mu)
        assert value == pytest.approx(0.0, abs=1e-12)  # V = 0 here
        assert np.allclose(grad, 0.0, atol=1e-15)

    def test_constant_zeta_grid_gives_potential_integral(self):
        spec = bump_case_a_spec(resolution=128)
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        value, grad = eval_h_quadratic(spec, np.zeros(2), mu)
        v_int = sum(a.weight * a.v_integral for a in mu.arcs)
        assert value == pytest.approx(v_int, abs=1e-12)
        assert value > 0.0
        assert np.allclose(grad, 0.0, atol=1e-15)

    def test_gradient_matches_finite_differences(self, pair, rng):
        spec, sol, mu = pair
        zeta = rng.uniform(-1.0, 1.0, size=2)
        _, grad = eval_h_quadratic(spec, zeta, mu)
        eps = 1e-6
        for d in range(2):
            e = np.zeros(2)
            e[d] = eps
            vp, _ = eval_h_quadratic(spec, zeta + e, mu)
            vm, _ = eval_h_quadratic(spec, zeta - e, mu)
            assert grad[d] == pytest.approx((vp - vm) / (2 * eps), abs=1e-6)

    def test_gradient_equals_fluxes_at_scaled_duals_grid(self):
        spec = bump_case_a_spec(resolution=128)
        sol = optimize_energy(spec)
        mu = assemble_measure(spec, sol)
        _, grad = eval_h_quadratic(spec, SQRT2 * sol.duals.phi, mu)
        assert np.max(np.abs(grad - spec.sources_sinks.fluxes)) <= 1e-6

    def test_value_equals_energy_at_scaled_duals(self, pair):
        spec, sol, mu = pair
        value, _ = eval_h_quadratic(spec, SQRT2 * sol.duals.phi, mu)
        assert value == pytest.approx(sol.E0, abs=1e-9)
