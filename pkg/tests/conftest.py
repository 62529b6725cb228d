"""Shared instance catalog for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

from fluxlines.model import (
    GaussianBump,
    PotentialSpec,
    ProblemSpec,
    SourceSinkSet,
)


def analytic_pair_spec(length: float = 1.0, lam: float = 1.0, **kwargs) -> ProblemSpec:
    ss = SourceSinkSet(
        points=np.array([[0.0, 0.0], [length, 0.0]]),
        fluxes=np.array([lam, -lam]),
    )
    return ProblemSpec(sources_sinks=ss, **kwargs)


def analytic_2x2_spec(**kwargs) -> ProblemSpec:
    """Two sources and two sinks with nearest-neighbor matching; W1 = 2."""
    ss = SourceSinkSet(
        points=np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 1.0], [10.0, 1.0]]),
        fluxes=np.array([1.0, 1.0, -1.0, -1.0]),
    )
    return ProblemSpec(sources_sinks=ss, **kwargs)


def offaxis_bump_potential() -> PotentialSpec:
    return PotentialSpec.gaussians(
        [GaussianBump(center=np.array([0.5, 0.35]), height=1.0, width=0.25)]
    )


def centered_bump_potential() -> PotentialSpec:
    return PotentialSpec.gaussians(
        [GaussianBump(center=np.array([0.5, 0.0]), height=1.0, width=0.25)]
    )


def bump_case_a_spec(resolution: int = 192) -> ProblemSpec:
    """Single off-axis bump, flux large enough that the optimal level sits
    strictly above sup V."""
    ss = SourceSinkSet(
        points=np.array([[0.0, 0.0], [1.0, 0.0]]),
        fluxes=np.array([2.0, -2.0]),
    )
    return ProblemSpec(sources_sinks=ss, potential=offaxis_bump_potential(),
                       grid_resolution=resolution)


def bump_case_b_spec(resolution: int = 192, eps: float = 1e-3) -> ProblemSpec:
    """Tiny flux pins the optimal level at sup V (point mass appears)."""
    ss = SourceSinkSet(
        points=np.array([[0.0, 0.0], [1.0, 0.0]]),
        fluxes=np.array([eps, -eps]),
    )
    potential = PotentialSpec.gaussians(
        [GaussianBump(center=np.array([0.5, 0.5]), height=1.0, width=0.3)]
    )
    return ProblemSpec(sources_sinks=ss, potential=potential, grid_resolution=resolution)


def multi_bump_spec(resolution: int = 160) -> ProblemSpec:
    """Asymmetric 2-source / 3-sink instance over two bumps."""
    bumps = PotentialSpec.gaussians(
        [
            GaussianBump(center=np.array([0.4, 0.35]), height=0.8, width=0.25),
            GaussianBump(center=np.array([1.1, -0.2]), height=0.5, width=0.2),
        ]
    )
    ss = SourceSinkSet(
        points=np.array(
            [[0.0, 0.0], [1.6, 0.1], [0.9, 0.8], [0.2, -0.7], [1.4, 0.9]]
        ),
        fluxes=np.array([1.5, 1.0, -0.8, -0.9, -0.8]),
    )
    return ProblemSpec(sources_sinks=ss, potential=bumps, grid_resolution=resolution)


def random_balanced_fluxes(rng: np.random.Generator, n_src: int, n_snk: int) -> np.ndarray:
    """Balanced flux vector with every entry bounded away from zero."""
    supplies = rng.uniform(0.2, 2.0, size=n_src)
    shares = rng.dirichlet(np.ones(n_snk)) * 0.8 + 0.2 / n_snk
    demands = supplies.sum() * shares / shares.sum()
    return np.concatenate([supplies, -demands])


def random_analytic_spec(rng: np.random.Generator, n_max: int = 6, dim: int = 2) -> ProblemSpec:
    n = int(rng.integers(2, n_max + 1))
    n_src = int(rng.integers(1, n))
    n_snk = n - n_src
    while True:
        points = rng.uniform(0.0, 2.0, size=(n, dim))
        d = np.linalg.norm(points[:, None] - points[None, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() > 0.05:
            break
    fluxes = random_balanced_fluxes(rng, n_src, n_snk)
    return ProblemSpec(sources_sinks=SourceSinkSet(points=points, fluxes=fluxes))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250809)
