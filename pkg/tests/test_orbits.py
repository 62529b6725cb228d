"""Mechanical-orbit shooting cross-check."""
import math

import numpy as np
import pytest

from conftest import analytic_pair_spec, bump_case_a_spec
from fluxlines.errors import ShootingDiverged
from fluxlines.geodesics import GeodesicEngine
from fluxlines.orbits import shoot_orbit


class TestStraightOrbit:
    def test_flight_time_at_constant_speed(self):
        # zero potential: speed sqrt(2E); for l=1, E=0.5 the transit takes 1,
        # while the quadrature time of flight is l/sqrt(E) = sqrt(2): the two
        # conventions differ by exactly sqrt(2)
        spec = analytic_pair_spec()
        eng = GeodesicEngine.for_spec(spec)
        orbit = shoot_orbit(spec, 0, 1, 0.5, engine=eng)
        assert orbit.flight_time == pytest.approx(1.0, rel=1e-9)
        T_quad = eng.path(0, 1, 0.5).T
        assert T_quad == pytest.approx(math.sqrt(2.0) * orbit.flight_time, rel=1e-9)

    def test_straight_hit(self):
        spec = analytic_pair_spec()
        orbit = shoot_orbit(spec, 0, 1, 0.5)
        assert orbit.endpoint_error < 1e-9
        assert orbit.energy_drift < 1e-9


@pytest.fixture(scope="module")
def setup():
    spec = bump_case_a_spec(resolution=192)
    eng = GeodesicEngine.for_spec(spec)
    return spec, eng


class TestBumpOrbit:

    def test_reaches_endpoint(self, setup):
        spec, eng = setup
        orbit = shoot_orbit(spec, 0, 1, 2.0, engine=eng)
        assert orbit.endpoint_error <= 1e-3
        assert orbit.energy_drift <= 1e-6

    def test_flight_time_tracks_quadrature_time(self, setup):
        spec, eng = setup
        orbit = shoot_orbit(spec, 0, 1, 2.0, engine=eng)
        T_quad = eng.path(0, 1, 2.0).T
        assert math.sqrt(2.0) * orbit.flight_time == pytest.approx(T_quad, rel=1e-2)

    def test_time_reversal_symmetry(self, setup):
        spec, eng = setup
        fwd = shoot_orbit(spec, 0, 1, 2.0, engine=eng)
        bwd = shoot_orbit(spec, 1, 0, 2.0, engine=eng)
        assert fwd.flight_time == pytest.approx(bwd.flight_time, abs=1e-6)

    def test_energy_conserved_along_trajectory(self, setup):
        spec, eng = setup
        orbit = shoot_orbit(spec, 0, 1, 2.0, engine=eng)
        from fluxlines.model import eval_potential_many

        v = eval_potential_many(spec.potential, orbit.trajectory)
        # positions sampled on the dense solution: V never exceeds E
        assert np.all(v <= 2.0)

    def test_divergence_reported(self, setup):
        spec, eng = setup
        with pytest.raises(ShootingDiverged):
            shoot_orbit(spec, 0, 1, 2.0, engine=eng, miss_tol=1e-15)
