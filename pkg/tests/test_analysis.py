import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sectorlab.analysis import (
    ClassificationReport,
    RotatingPlaneReport,
    Verdict,
    classify,
    difference_field,
    read_report,
    read_sweep_csv,
    rotating_plane,
    verify_utheta_equation,
    write_report,
    write_sweep_csv,
)
from sectorlab.discretization import ScalarField, assemble_linearized, theta_derivative
from sectorlab.nonlinear import Nonlinearity, ProblemSpec, ground_state

from conftest import disc


def _flip(u):
    return ScalarField(u.grid, u.values[:, ::-1].copy())


def test_difference_field_examples():
    g = disc(math.pi, 8, 9)
    u = ScalarField.from_function(g, lambda r, t: r * np.cos(t))
    assert np.all(difference_field(ScalarField.from_function(g, lambda r, t: r + 0 * t), 3) == 0)
    w = difference_field(u, 4)  # reflection about pi/2 maps cos to -cos
    assert np.allclose(w, -2 * u.values, atol=1e-14)
    assert np.all(difference_field(u, 0) == 0)
    with pytest.raises(ValueError):
        difference_field(u, 9)


@given(st.integers(0, 10**6))
def test_difference_about_the_middle_is_odd(seed):
    g = disc(1.3, 6, 11)
    u = ScalarField(g, np.random.default_rng(seed).standard_normal(g.shape))
    w = difference_field(u, 5)
    assert np.allclose(w, -w[:, ::-1])
    assert np.all(w[:, 5] == 0)


def test_rotating_plane_signs():
    g = disc(math.pi, 16, 17)
    inc = ScalarField.from_function(g, lambda r, t: (1 - r * r) * (2 - np.cos(t)))
    rep = rotating_plane(inc)
    assert np.all(rep.min_w[1:] > 0) and np.all(rep.boundary_min > 0)
    dec = rotating_plane(_flip(inc))
    assert np.all(dec.max_w[1:] < 0)
    assert len(rotating_plane(inc, n_alpha=5).alphas) == 5
    with pytest.raises(ValueError):
        rotating_plane(inc, n_alpha=2)
    with pytest.raises(ValueError):
        RotatingPlaneReport(np.array([1.0, 0.5]), np.array([1, 2]), np.zeros(2), np.zeros(2), np.zeros(2))


def _stiff_norm(u, ops):
    ops0 = ops.with_space("H1_0")
    ax = ops0.lap.A @ ops0.lap.restrict(theta_derivative(u))
    return float(np.sqrt(np.sum(ax * ax / ops0.mass)))


def test_rotating_plane_on_linear_modes(psi11, psi21):
    v = psi11[0]
    inc = v if rotating_plane(v).min_w.min() >= 0 else _flip(v)
    rep = rotating_plane(inc)
    tol = 10 * v.grid.h**2 * np.abs(v.values).max()
    assert rep.min_w.min() >= -tol and rep.max_w.max() > 0
    assert rotating_plane(psi21[0]).min_w.min() < -tol


def test_utheta_of_separable_mode_is_in_kernel(psi11):
    v, lam = psi11
    ops = assemble_linearized(v.grid, v, Nonlinearity.linear(lam))
    assert verify_utheta_equation(v, ops) < 1e-6 * _stiff_norm(v, ops)


def test_utheta_residual_shrinks_under_refinement():
    rel = []
    for n in (16, 32):
        rec = ground_state(ProblemSpec(disc(math.pi, n), Nonlinearity.henon(6.0, 3.0)), with_morse=False)
        assert rec.notes["winner"] == "biased"
        ops = assemble_linearized(rec.spec.grid, rec.field, rec.spec.nonlinearity)
        rel.append(verify_utheta_equation(rec.field, ops) / _stiff_norm(rec.field, ops))
    assert rel[1] < rel[0] / 3


def test_linear_mode_verdicts(psi01, psi11, psi21):
    v0, l0 = psi01
    r0 = classify(v0, Nonlinearity.linear(l0))
    assert r0.verdict is Verdict.THETA_CONSTANT and r0.morse_index == 0
    v1, l1 = psi11
    r1 = classify(v1, Nonlinearity.linear(l1))
    assert r1.verdict is Verdict.STRICTLY_MONOTONE and r1.morse_index == 1
    assert abs(r1.lambda1_dirichlet) <= r1.zero_tol and r1.utheta_alignment >= 0.99
    v2, l2 = psi21
    r2 = classify(v2, Nonlinearity.linear(l2))
    assert r2.verdict is Verdict.INCONSISTENT and r2.morse_index == 2
    assert any("changes sign" in s for s in r2.implications)


def test_reflection_flips_direction(psi11):
    v, lam = psi11
    a = classify(v, Nonlinearity.linear(lam))
    b = classify(_flip(v), Nonlinearity.linear(lam))
    assert a.verdict == b.verdict == Verdict.STRICTLY_MONOTONE
    assert a.morse_index == b.morse_index == 1
    assert a.direction == -b.direction != 0
    assert b.lambda1_gamma == pytest.approx(a.lambda1_gamma, rel=1e-7)
    assert b.utheta_alignment == pytest.approx(a.utheta_alignment, abs=1e-9)


def test_henon_verdicts(henon_states):
    radial = classify(henon_states[0.0])
    assert radial.verdict is Verdict.THETA_CONSTANT and radial.morse_index == 1
    broken = classify(henon_states[20.0])
    assert broken.verdict is Verdict.STRICTLY_MONOTONE and broken.morse_index == 1
    assert broken.utheta_alignment >= 0.99
    assert broken.utheta_alignment_first <= broken.utheta_alignment


def test_theta_constant_state_has_flat_sweep(henon_states):
    u = henon_states[0.0].field
    rep = rotating_plane(u)
    bound = 10 * u.grid.h**2 * np.abs(u.values).max()
    assert np.abs(rep.min_w).max() <= bound and np.abs(rep.boundary_min).max() <= bound


def test_bare_field_needs_nonlinearity(psi01):
    with pytest.raises(ValueError):
        classify(psi01[0])


def test_report_round_trip(tmp_path, psi21):
    rep = classify(psi21[0], Nonlinearity.linear(psi21[1]))
    rep.flags.append("example flag")
    write_report(tmp_path / "c.txt", rep)
    back = read_report(tmp_path / "c.txt")
    assert back == rep
    assert ClassificationReport.from_text(rep.to_text()).to_text() == rep.to_text()


def test_sweep_csv_round_trip(tmp_path, psi11):
    rep = rotating_plane(psi11[0])
    write_sweep_csv(tmp_path / "s.csv", rep)
    back = read_sweep_csv(tmp_path / "s.csv")
    for name in ("alphas", "columns", "min_w", "boundary_min", "max_w"):
        assert np.array_equal(getattr(back, name), getattr(rep, name))
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_sweep_csv(tmp_path / "bad.csv")
