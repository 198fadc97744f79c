import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sectorlab.discretization import (
    FieldFormatError,
    PolarGrid,
    ScalarField,
    Space,
    _full_stiffness,
    assemble_laplacian,
    assemble_linearized,
    constant_potential,
    quadratic_form,
    read_field,
    theta_derivative,
    write_field,
)
from sectorlab.domain import RectDomain, SectorDomain
from sectorlab.nonlinear import Nonlinearity
from sectorlab.special import bessel_zero
from sectorlab.spectral import smallest_eigenpairs

grids = st.builds(
    lambda r_in, beta, n_r, n_t: PolarGrid(SectorDomain(r_in, r_in + 1.0, beta), n_r, n_t),
    st.sampled_from([0.0, 0.3, 1.0]),
    st.floats(0.2, 6.2),
    st.integers(3, 12),
    st.integers(3, 12),
)


def test_grid_layout():
    g = PolarGrid(SectorDomain(0.0, 1.0, math.pi / 2), 8, 5)
    assert g.r[0] == pytest.approx(g.h_r / 2)
    assert g.r[-1] == 1.0
    assert g.theta[0] == 0.0 and g.theta[-1] == math.pi / 2
    a = PolarGrid(SectorDomain(0.5, 1.5, 1.0), 5, 5)
    assert a.r[0] == 0.5 and a.dirichlet_rows == (0, 4)
    with pytest.raises(ValueError):
        PolarGrid(SectorDomain(0.0, 1.0, 1.0), 2, 5)


@given(grids)
def test_stiffness_is_symmetric_and_semidefinite(g):
    for space in ("H1_gamma", "H1_0"):
        lap = assemble_laplacian(g, space)
        assert lap.A.asymmetry() <= 1e-12
        assert np.all(lap.mass > 0)
        ev = np.linalg.eigvalsh(lap.A.toarray())
        assert ev.min() > 0  # a Dirichlet arc is always active
    K, _ = _full_stiffness(g)
    assert np.allclose(K @ np.ones(g.size), 0.0, atol=1e-12 * np.abs(K.data).max())
    assert np.linalg.eigvalsh(K.toarray()).min() >= -1e-10 * np.abs(K.data).max()


def test_constants_in_kernel_away_from_dirichlet_rows():
    g = PolarGrid(SectorDomain(0.5, 1.5, 1.0), 10, 9)
    lap = assemble_laplacian(g, "H1_gamma")
    Aone = (lap.A @ np.ones(lap.free.size)).reshape(g.n_r - 2, g.n_theta)
    assert np.allclose(Aone[1:-1], 0.0, atol=1e-12)
    assert np.all(Aone[0] > 0) and np.all(Aone[-1] > 0)


def _lowest(grid, m=1, space="H1_gamma"):
    return smallest_eigenpairs(constant_potential(grid, 0.0, space), m).eigenvalues


def test_disc_sector_second_order_convergence():
    exact = bessel_zero(0, 1) ** 2
    errs = [abs(_lowest(PolarGrid(SectorDomain(0, 1, math.pi / 2), n, n))[0] - exact) for n in (16, 32, 64)]
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_rectangle_rayleigh_quotient_converges():
    errs = []
    for n in (16, 32, 64):
        g = PolarGrid(RectDomain(2.0, 1.0), n, n)
        errs.append(abs(_lowest(g)[0] - math.pi**2))
    assert errs[0] / errs[1] >= 3.5 and errs[1] / errs[2] >= 3.5


def test_linearized_potentials():
    g = PolarGrid(SectorDomain(0, 1, 1.0), 6, 5)
    lin = assemble_linearized(g, None, Nonlinearity.linear(3.5))
    assert np.all(lin.potential == 3.5)
    assert np.allclose(lin.operator().toarray(), lin.A.toarray() - np.diag(3.5 * lin.mass))
    zero = assemble_linearized(g, ScalarField.zeros(g), Nonlinearity.henon(2.0, 3.0))
    assert np.all(zero.potential == 0.0)
    # Henon alpha = 1, p = 3 at r = 0.5, u = 2 gives 3 * 0.5 * 4
    assert Nonlinearity.henon(1.0, 3.0).fprime(0.5, 2.0) == pytest.approx(6.0)


def test_non_finite_potential_names_the_node():
    g = PolarGrid(SectorDomain(0, 1, 1.0), 6, 5)
    u = ScalarField(g, np.ones(g.shape))
    with pytest.raises(ValueError, match=r"node \(i=0, j=0\)"):
        assemble_linearized(g, u, lambda r, v: 1.0 / (r - g.r[0]))


def test_quadratic_form_examples():
    g = PolarGrid(SectorDomain(0, 1, math.pi / 2), 24, 24)
    ops = constant_potential(g, 0.0)
    assert quadratic_form(ops, ScalarField.zeros(g)) == 0.0
    spec = smallest_eigenpairs(ops, 2)
    v = spec.eigenvector(0)
    x = ops.lap.restrict(v)
    assert quadratic_form(ops, v) / float(x @ (ops.mass * x)) == pytest.approx(spec.eigenvalues[0], rel=1e-10)
    bad = v.copy()
    bad.values[-1, 3] = 1e-3
    with pytest.raises(ValueError):
        quadratic_form(ops, bad)


def test_quadratic_form_of_radial_mode_vanishes_under_refinement():
    vals = []
    target = bessel_zero(0, 1) ** 2
    for n in (16, 32, 64):
        g = PolarGrid(SectorDomain(0, 1, math.pi / 2), n, n)
        spec = smallest_eigenpairs(constant_potential(g, 0.0), 1)
        ops = constant_potential(g, target)
        vals.append(abs(quadratic_form(ops, spec.eigenvector(0))))
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 1e-3


def test_theta_derivative_examples():
    g = PolarGrid(SectorDomain(0, 1, 1.2), 5, 41)
    assert np.all(theta_derivative(ScalarField.from_function(g, lambda r, t: r + 0 * t)).values == 0)
    c = ScalarField.from_function(g, lambda r, t: np.cos(np.pi * t / 1.2))
    d = theta_derivative(c).values
    exact = -(np.pi / 1.2) * np.sin(np.pi * g.theta / 1.2)
    assert np.max(np.abs(d[:, 1:-1] - exact[1:-1])) < 5 * g.h_theta**2 * (np.pi / 1.2) ** 3
    lin = theta_derivative(ScalarField.from_function(g, lambda r, t: t + 0 * r)).values
    assert np.allclose(lin[:, 1:-1], 1.0)


@given(grids, st.integers(0, 10**6))
def test_theta_derivative_vanishes_on_edge_columns(g, seed):
    v = ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape))
    d = theta_derivative(v).values
    assert np.all(d[:, 0] == 0) and np.all(d[:, -1] == 0)


def test_space_tags():
    g = PolarGrid(SectorDomain(0, 1, 1.0), 6, 7)
    assert Space.parse("H1_gamma+alpha[3]", g).dirichlet_columns == (3,)
    assert Space.parse("H1_0", g).dirichlet_columns == (0, 6)
    with pytest.raises(ValueError):
        Space.parse("H2", g)
    cut = assemble_laplacian(g, Space.split(3))
    assert cut.free.size == (g.n_r - 1) * (g.n_theta - 1)


@given(grids, st.integers(0, 10**6))
def test_field_file_round_trip(tmp_path_factory, g, seed):
    v = ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape) * 1e3)
    path = tmp_path_factory.mktemp("f") / "u.field"
    write_field(path, v)
    back = read_field(path)
    assert back.grid.same_as(g)
    assert np.array_equal(back.values, v.values)


def test_rectangle_field_round_trip(tmp_path):
    g = PolarGrid(RectDomain(2.0, 0.5), 4, 5)
    v = ScalarField.from_function(g, lambda x2, x1: x1 * x2)
    write_field(tmp_path / "r.field", v)
    assert read_field(tmp_path / "r.field").grid == g


@pytest.mark.parametrize(
    "content",
    ["", "SECTOR 3 3 0 1\n", "BOX 3 3 0 1 1\n" + "0\n" * 9, "SECTOR 3 3 0 1 1\n" + "0\n" * 8, "SECTOR 3 3 0 1 1\n" + "0\n" * 8 + "nan\n", "SECTOR 3 3 0 1 1\n" + "x\n" * 9],
)
def test_malformed_field_files(tmp_path, content):
    p = tmp_path / "bad.field"
    p.write_text(content)
    with pytest.raises(FieldFormatError):
        read_field(p)


def test_field_rejects_non_finite():
    g = PolarGrid(SectorDomain(0, 1, 1.0), 3, 3)
    with pytest.raises(ValueError):
        ScalarField(g, np.full(9, np.inf))
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(8))
