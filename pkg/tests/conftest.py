import math

import pytest
from hypothesis import HealthCheck, settings

from sectorlab.discretization import PolarGrid, constant_potential
from sectorlab.domain import SectorDomain
from sectorlab.nonlinear import Nonlinearity, ProblemSpec, ground_state
from sectorlab.spectral import smallest_eigenpairs

settings.register_profile("repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def disc(beta, n_r=48, n_theta=None, r_outer=1.0):
    return PolarGrid(SectorDomain(0.0, r_outer, beta), n_r, n_theta or n_r)


def laplace_modes(grid, m, space="H1_gamma"):
    return smallest_eigenpairs(constant_potential(grid, 0.0, space), m)


@pytest.fixture(scope="session")
def quarter_modes():
    """Dirichlet-arc modes of the quarter disc (beta = pi/2 > beta_hat)."""
    return laplace_modes(disc(math.pi / 2, 64), 3)


@pytest.fixture(scope="session")
def half_modes():
    return laplace_modes(disc(math.pi, 64), 4)


@pytest.fixture(scope="session")
def psi01(quarter_modes):
    return quarter_modes.eigenvector(0), float(quarter_modes.eigenvalues[0])


@pytest.fixture(scope="session")
def psi11(quarter_modes):
    return quarter_modes.eigenvector(1), float(quarter_modes.eigenvalues[1])


@pytest.fixture(scope="session")
def psi21(half_modes):
    return half_modes.eigenvector(2), float(half_modes.eigenvalues[2])


@pytest.fixture(scope="session")
def henon_states():
    g = disc(math.pi, 64)
    return {a: ground_state(ProblemSpec(g, Nonlinearity.henon(a, 3.0))) for a in (0.0, 20.0)}


@pytest.fixture(scope="session")
def lane_emden_state():
    g = PolarGrid(SectorDomain(1.0, 2.0, math.pi / 2), 48, 48)
    return ground_state(ProblemSpec(g, Nonlinearity.lane_emden(4.0)))
