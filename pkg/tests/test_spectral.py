import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from sectorlab.discretization import PolarGrid, ScalarField, assemble_linearized, constant_potential
from sectorlab.domain import RectDomain, SectorDomain
from sectorlab.nonlinear import Nonlinearity
from sectorlab.special import bessel_zero, critical_angle, eigen_catalog
from sectorlab.sparse import CSRMatrix
from sectorlab.spectral import (
    EigenSolverError,
    gershgorin_lower_bound,
    inertia_below,
    lowest_pairs,
    mode_label,
    morse_index,
    read_spectrum_csv,
    smallest_eigenpairs,
    splitting_inequality_check,
    write_spectrum_csv,
)

from conftest import disc, laplace_modes


def _csr(S):
    r, c = np.nonzero(S)
    return CSRMatrix.from_triplets(r, c, S[r, c], S.shape[0])


def _dense_pencil(ops):
    return scipy.linalg.eigh(ops.operator().toarray(), np.diag(ops.mass), eigvals_only=True)


@pytest.mark.parametrize("space", ["H1_gamma", "H1_0", "H1_gamma+alpha[6]"])
def test_matches_dense_generalized_eigh(space):
    g = PolarGrid(SectorDomain(0.3, 1.0, 2.0), 14, 13)
    u = ScalarField.from_function(g, lambda r, t: 3 * np.sin(np.pi * (r - 0.3) / 0.7) * (1 + 0.4 * np.cos(t)))
    ops = assemble_linearized(g, u, Nonlinearity.henon(1.0, 3.0), space)
    spec = smallest_eigenpairs(ops, 6, 1e-10)
    assert np.allclose(spec.eigenvalues, _dense_pencil(ops)[:6], rtol=1e-8, atol=1e-8)
    gram = spec.vectors.T @ (ops.mass[:, None] * spec.vectors)
    assert np.allclose(gram, np.eye(6), atol=1e-9)
    assert spec.inertia_checked


@given(st.integers(0, 10**6), st.floats(-50, 50))
def test_random_pencils_against_dense_and_permutation(seed, shift):
    rng = np.random.default_rng(seed)
    n = 30
    B = rng.standard_normal((n, n)) * (rng.random((n, n)) < 0.15)
    S = B + B.T + np.diag(rng.uniform(0, 4, n) + shift)
    mass = rng.uniform(0.5, 2.0, n)
    ref = scipy.linalg.eigh(S, np.diag(mass), eigvals_only=True)[:3]
    lam = lowest_pairs(_csr(S), mass, 3, 1e-10)[0]
    assert np.allclose(lam, ref, rtol=1e-7, atol=1e-7)
    perm = rng.permutation(n)
    lam_p = lowest_pairs(_csr(S[np.ix_(perm, perm)]), mass[perm], 3, 1e-10)[0]
    assert np.allclose(lam_p, lam, rtol=1e-9, atol=1e-9)
    assert gershgorin_lower_bound(_csr(S), mass) <= ref[0] + 1e-9


def test_eigenvectors_follow_sign_convention(quarter_modes):
    for c in range(len(quarter_modes)):
        col = quarter_modes.vectors[:, c]
        first = col[np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())[0]]
        assert first > 0
    assert np.all(quarter_modes.residuals <= 1e-7)


def test_splitting_at_angular_mode_has_zero_lhs(psi11):
    v, lam = psi11
    chk = splitting_inequality_check(constant_potential(v.grid, lam), v.grid.beta / 2)
    assert chk.holds and abs(chk.lhs) < 1e-8 * lam


def test_inertia_counts_eigenvalues_below_shift():
    g = disc(math.pi / 2, 10)
    ops = constant_potential(g, 0.0)
    ev = _dense_pencil(ops)
    for s in (1.0, 10.0, 40.0, 100.0):
        assert inertia_below(ops.operator(), ops.mass, s) == int(np.sum(ev < s))


def test_solver_reports_failure_with_residuals():
    ops = constant_potential(disc(math.pi / 2, 24), 0.0)
    with pytest.raises(EigenSolverError) as err:
        smallest_eigenpairs(ops, 4, 1e-14, max_iter=2)
    assert err.value.residuals is not None
    with pytest.raises(ValueError):
        smallest_eigenpairs(ops, 0)


def test_quarter_disc_second_mode_is_angular(quarter_modes):
    assert mode_label(quarter_modes.eigenvector(0)) == (0, 1)
    assert mode_label(quarter_modes.eigenvector(1)) == (1, 1)
    assert eigen_catalog(math.pi / 2, 3, 3)[1][1] == (1, 1)


def test_narrow_sector_second_mode_is_radial():
    spec = laplace_modes(disc(math.pi / 3, 48), 2)
    assert mode_label(spec.eigenvector(1)) == (0, 2)
    assert eigen_catalog(math.pi / 3, 3, 3)[1][1] == (0, 2)


def test_rectangle_spectrum_matches_catalog():
    beta = 2.0
    g = PolarGrid(RectDomain(beta, 1.0), 48, 48)
    spec = laplace_modes(g, 4)
    exact = sorted((n * math.pi / beta) ** 2 + (k * math.pi) ** 2 for n in range(4) for k in range(1, 3))[:4]
    assert np.allclose(spec.eigenvalues, exact, rtol=5e-3)


def test_critical_opening_is_nearly_double():
    b = critical_angle(bessel_zero(0, 2))
    spec = laplace_modes(disc(b, 48), 3)
    lam = spec.eigenvalues
    assert abs(lam[2] - lam[1]) < 1e-2 * lam[1]
    assert spec.near_degenerate(1e-2 * lam[1]) == [(1, 2)]


def test_morse_examples():
    g = disc(math.pi / 2, 24)
    spec = smallest_eigenpairs(constant_potential(g, 0.0), 3)
    lam = spec.eigenvalues
    for V, index, zeros in [(0.0, 0, 0), (lam[0] + 4.0, 1, 0), ((lam[1] + lam[2]) / 2, 2, 0), (lam[0], 0, 1)]:
        shifted = smallest_eigenpairs(constant_potential(g, V), 3)
        rep = morse_index(shifted)
        assert (rep.index, rep.zero_modes) == (index, zeros)
        assert rep.inertia_index == index


def test_morse_flags_possible_undercount():
    g = disc(math.pi / 2, 16)
    rep = morse_index(smallest_eigenpairs(constant_potential(g, 500.0), 2))
    assert rep.undercounted and rep.index == 2 and rep.inertia_index > 2


@pytest.mark.parametrize("alpha_frac", [0.5, 1 / 3, 0.75])
@pytest.mark.parametrize("V", [0.0, 20.0])
def test_splitting_inequality_examples(alpha_frac, V):
    g = PolarGrid(SectorDomain(0.0, 1.0, math.pi), 33, 33)
    chk = splitting_inequality_check(constant_potential(g, V), alpha_frac * math.pi)
    assert chk.holds
    if alpha_frac == 0.5:
        assert chk.lam_left == pytest.approx(chk.lam_right, rel=1e-9)
        assert chk.mismatch == 0.0


def test_splitting_rejects_cut_outside_sector():
    ops = constant_potential(disc(1.0, 12), 0.0)
    for a in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            splitting_inequality_check(ops, a)


def test_spectrum_csv_round_trip(tmp_path, quarter_modes):
    p = tmp_path / "spectrum.csv"
    write_spectrum_csv(p, quarter_modes)
    lam, res = read_spectrum_csv(p)
    assert np.array_equal(lam, quarter_modes.eigenvalues)
    assert np.array_equal(res, quarter_modes.residuals)
    p.write_text("k,lambda\n1,2\n")
    with pytest.raises(ValueError):
        read_spectrum_csv(p)
