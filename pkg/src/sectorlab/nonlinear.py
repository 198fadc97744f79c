"""Solvers for -Laplacian u = f(r, u) with Dirichlet arcs and Neumann edges.

* ``newton_solve``: damped Newton with Armijo backtracking on the residual.
* ``ground_state``: Nehari-constrained Sobolev-gradient descent from a fixed
  set of starts, each polished by Newton; the lowest energy wins.
* ``sector_rescale``: maps a half-disc solution of the weighted power problem
  to a solution on a sector of any opening.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    Laplacian,
    PolarGrid,
    ScalarField,
    assemble_laplacian,
    assemble_linearized,
)
from .domain import SectorDomain, mirror_index
from .sparse import BandFactor, FactorizationError
from .spectral import MorseReport, default_zero_tol, morse_index, smallest_eigenpairs

__all__ = [
    "GroundStateError",
    "NewtonError",
    "Nonlinearity",
    "ProblemSpec",
    "SolutionRecord",
    "energy",
    "ground_state",
    "newton_solve",
    "residual",
    "sector_rescale",
]

log = logging.getLogger(__name__)

STARTS = ("radial", "biased", "mirrored")


class NewtonError(RuntimeError):
    def __init__(self, message: str, trace: list[float]):
        super().__init__(message)
        self.trace = trace


class GroundStateError(RuntimeError):
    pass


@dataclass(frozen=True)
class Nonlinearity:
    """f(r, u) = lam * u (linear) or r**weight * |u|**(p-1) * u (power kinds).

    ``kind`` is one of "linear", "henon", "lane_emden", "power"; the last
    three differ only in how the weight exponent is named.
    """

    kind: str
    lam: float = 0.0
    weight: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "henon", "lane_emden", "power"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind != "linear" and not self.p > 1.0:
            raise ValueError(f"power nonlinearities need p > 1, got {self.p}")
        if self.kind == "lane_emden" and self.weight != 0.0:
            raise ValueError("Lane-Emden has no weight")

    @classmethod
    def linear(cls, lam: float) -> "Nonlinearity":
        return cls("linear", lam=float(lam))

    @classmethod
    def henon(cls, alpha: float, p: float) -> "Nonlinearity":
        return cls("henon", weight=float(alpha), p=float(p))

    @classmethod
    def lane_emden(cls, p: float) -> "Nonlinearity":
        return cls("lane_emden", p=float(p))

    @classmethod
    def power(cls, weight: float, p: float) -> "Nonlinearity":
        return cls("power", weight=float(weight), p=float(p))

    @property
    def homogeneous(self) -> bool:
        return self.kind != "linear"

    def _w(self, r):
        return np.ones_like(r, dtype=float) if self.weight == 0.0 else np.asarray(r, float) ** self.weight

    def f(self, r, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return self.lam * u
        return self._w(r) * np.abs(u) ** (self.p - 1.0) * u

    def F(self, r, u):
        """Antiderivative in u with F(r, 0) = 0."""
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return 0.5 * self.lam * u * u
        return self._w(r) * np.abs(u) ** (self.p + 1.0) / (self.p + 1.0)

    def fprime(self, r, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "linear":
            return np.full(np.broadcast(r, u).shape, self.lam)
        return self.p * self._w(r) * np.abs(u) ** (self.p - 1.0)

    def describe(self) -> dict[str, str]:
        out = {"problem.kind": self.kind}
        if self.kind == "linear":
            out["problem.lambda"] = repr(self.lam)
        else:
            out["problem.p"] = repr(self.p)
            if self.kind == "henon":
                out["problem.alpha"] = repr(self.weight)
            elif self.kind == "power":
                out["problem.weight"] = repr(self.weight)
        return out


@dataclass(frozen=True)
class ProblemSpec:
    grid: PolarGrid
    nonlinearity: Nonlinearity
    g_outer: float = 0.0
    g_inner: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.g_outer) and math.isfinite(self.g_inner)):
            raise ValueError("Dirichlet data must be finite")

    @property
    def homogeneous_data(self) -> bool:
        return self.g_outer == 0.0 and (self.grid.staggered or self.g_inner == 0.0)

    def boundary_field(self) -> ScalarField:
        """Zero field carrying the Dirichlet data on the arc rows."""
        vals = np.zeros(self.grid.shape)
        vals[-1, :] = self.g_outer
        if not self.grid.staggered:
            vals[0, :] = self.g_inner
        return ScalarField(self.grid, vals)

    def describe(self) -> dict[str, str]:
        g = self.grid
        out = {}
        if g.cartesian:
            out.update({"domain.shape": "rect", "domain.beta": repr(g.dom.beta), "domain.width": repr(g.dom.width)})
        else:
            out.update(
                {
                    "domain.shape": "sector",
                    "domain.r_inner": repr(g.dom.r_inner),
                    "domain.r_outer": repr(g.dom.r_outer),
                    "domain.beta": repr(g.dom.beta),
                }
            )
        out.update({"grid.n_r": str(g.n_r), "grid.n_theta": str(g.n_theta)})
        out.update(self.nonlinearity.describe())
        out.update({"problem.g_outer": repr(self.g_outer), "problem.g_inner": repr(self.g_inner)})
        return out

    def config_hash(self) -> str:
        blob = "\n".join(f"{k}={v}" for k, v in sorted(self.describe().items()))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SolutionRecord:
    field: ScalarField
    residual_norm: float
    energy: float
    spec: ProblemSpec
    solver: str
    iterations: int = 0
    trace: list[float] = field(default_factory=list)
    morse: MorseReport | None = None
    candidates: list[dict] = field(default_factory=list)
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def provenance(self) -> str:
        return f"{self.solver}:{self.spec.config_hash()}"

    def metadata(self) -> dict[str, str]:
        meta = dict(self.spec.describe())
        meta.update(
            {
                "solver": self.solver,
                "config_hash": self.spec.config_hash(),
                "residual_norm": repr(float(self.residual_norm)),
                "energy": repr(float(self.energy)),
                "iterations": str(self.iterations),
            }
        )
        if self.morse is not None:
            meta["morse.index"] = str(self.morse.index)
            meta["morse.zero_modes"] = str(self.morse.zero_modes)
            meta["morse.zero_tol"] = repr(self.morse.zero_tol)
        for c in self.candidates:
            meta[f"start.{c['start']}.energy"] = repr(float(c["energy"])) if c.get("energy") is not None else "failed"
        meta.update(self.notes)
        return meta


# -- discrete functionals ----------------------------------------------------


class _Discrete:
    """Free-node view of a problem: stiffness, mass, radii and lift."""

    def __init__(self, spec: ProblemSpec, lap: Laplacian | None = None):
        self.spec = spec
        self.lap = lap or assemble_laplacian(spec.grid, "H1_gamma")
        rr, _ = spec.grid.mesh()
        self.r = rr.reshape(-1)[self.lap.free]
        self.bc = spec.boundary_field()
        self.lift = self.lap.lift(self.bc)
        self.mass = self.lap.mass
        self.A = self.lap.A
        self.nl = spec.nonlinearity

    def residual(self, x):
        return self.A @ x + self.lift - self.mass * self.nl.f(self.r, x)

    def norm(self, res) -> float:
        return float(np.sqrt(np.sum(res * res / self.mass)))

    def energy(self, x) -> float:
        return float(0.5 * x @ (self.A @ x) + x @ self.lift - np.sum(self.mass * self.nl.F(self.r, x)))

    def jacobian(self, x):
        return self.A.add_diagonal(-self.mass * self.nl.fprime(self.r, x))

    def field(self, x) -> ScalarField:
        return self.lap.prolong(x, fill=self.bc)


def residual(spec: ProblemSpec, u: ScalarField) -> float:
    """M^{-1}-norm of A u + lift - M f(u) on the free nodes."""
    d = _Discrete(spec)
    return d.norm(d.residual(d.lap.restrict(u)))


def energy(spec: ProblemSpec, u: ScalarField) -> float:
    """E(u) = 1/2 u^T A u + u^T lift - sum M_ii F(r_i, u_i) over free nodes."""
    d = _Discrete(spec)
    return d.energy(d.lap.restrict(u))


def _radial_projector(grid: PolarGrid, free: np.ndarray):
    """Mass-weighted ring averaging restricted to the free nodes."""
    w = grid.column_weights
    rows = free // grid.n_theta
    cols = free % grid.n_theta
    wf = w[cols]

    def project(x):
        num = np.bincount(rows, weights=wf * x, minlength=grid.n_r)
        den = np.bincount(rows, weights=wf, minlength=grid.n_r)
        avg = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        return avg[rows]

    return project


def _solve(J, rhs):
    try:
        return BandFactor(J).solve(rhs)
    except FactorizationError:
        if J.n > 6000:
            raise
        return np.linalg.solve(J.toarray(), rhs)


def _newton(d: _Discrete, x, tol: float, max_iter: int, project=None):
    res = d.residual(x)
    nrm = d.norm(res)
    trace = [nrm]
    it = 0
    while nrm > tol:
        if it >= max_iter:
            raise NewtonError(f"no convergence in {max_iter} Newton steps (residual {nrm:.3e})", trace)
        it += 1
        try:
            step = -_solve(d.jacobian(x), res)
        except (FactorizationError, np.linalg.LinAlgError) as exc:
            raise NewtonError(f"singular Jacobian at step {it}: {exc}", trace) from None
        if project is not None:
            step = project(step)
        t = 1.0
        for _ in range(31):
            trial = x + t * step
            if project is not None:
                trial = project(trial)
            tres = d.residual(trial)
            tn = d.norm(tres)
            if np.isfinite(tn) and tn <= (1.0 - 1e-4 * t) * nrm:
                break
            t *= 0.5
            if t * np.abs(step).max() < 1e-14 * (1.0 + np.abs(x).max()):
                raise NewtonError(f"line search stagnated at step {it} (residual {nrm:.3e})", trace)
        else:
            raise NewtonError(f"no decrease after 30 halvings at step {it} (residual {nrm:.3e})", trace)
        x, res, nrm = trial, tres, tn
        trace.append(nrm)
        if not np.isfinite(nrm) or nrm > 1e12 * (trace[0] + 1.0):
            raise NewtonError(f"Newton iteration diverged at step {it}", trace)
    return x, nrm, it, trace


def newton_solve(
    spec: ProblemSpec,
    initial: ScalarField,
    tol: float = 1e-9,
    *,
    max_iter: int = 50,
    with_morse: bool = False,
) -> SolutionRecord:
    """Damped Newton for the mixed problem from ``initial``.

    Accepts when the residual M^{-1}-norm is at most ``tol``; each step is
    halved (Armijo) up to 30 times.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not initial.grid.same_as(spec.grid):
        raise ValueError("initial field lives on a different grid")
    d = _Discrete(spec)
    x, nrm, it, trace = _newton(d, d.lap.restrict(initial).copy(), tol, max_iter)
    sol = d.field(x)
    # re-verify against a fresh assembly
    check = residual(spec, sol)
    if check > tol * (1.0 + 1e-6):
        raise NewtonError(f"re-assembled residual {check:.3e} exceeds tol {tol:.3e}", trace)
    rec = SolutionRecord(sol, check, d.energy(x), spec, "newton", it, trace)
    if with_morse:
        attach_morse(rec)
    return rec


def attach_morse(rec: SolutionRecord, m: int = 4, zero_tol: float | None = None) -> MorseReport:
    ops = assemble_linearized(rec.spec.grid, rec.field, rec.spec.nonlinearity, "H1_gamma")
    spec = smallest_eigenpairs(ops, min(m, ops.n))
    rec.morse = morse_index(spec, zero_tol if zero_tol is not None else default_zero_tol(ops))
    return rec.morse


def start_field(grid: PolarGrid, start: str) -> ScalarField:
    """The documented multistart fields: positive bump, optionally tilted in theta."""
    rr, tt = grid.mesh()
    if grid.cartesian:
        width = grid.dom.width
        bump = np.sin(np.pi * rr / width)
    elif grid.staggered:
        bump = 1.0 - (rr / grid.dom.r_outer) ** 2
    else:
        a, b = grid.dom.r_inner, grid.dom.r_outer
        bump = (rr - a) * (b - rr) * 4.0 / (b - a) ** 2
    tilt = np.cos(np.pi * tt / grid.beta)
    if start == "radial":
        vals = bump
    elif start == "biased":
        vals = bump * (1.0 + 0.5 * tilt)
    elif start == "mirrored":
        vals = bump * (1.0 - 0.5 * tilt)
    else:
        raise ValueError(f"unknown start {start!r}; choose from {STARTS}")
    vals = np.clip(vals, 0.0, None)
    vals[list(grid.dirichlet_rows), :] = 0.0
    return ScalarField(grid, vals)


def _nehari_descent(d: _Discrete, x, gtol: float, max_iter: int, project=None):
    """Sobolev-gradient descent of E restricted to the Nehari manifold."""
    nl = d.nl
    p = nl.p
    factor = BandFactor(d.A)
    w = nl._w(d.r)

    def to_nehari(v):
        a = v @ (d.A @ v)
        b = np.sum(d.mass * w * np.abs(v) ** (p + 1.0))
        if not (a > 0 and b > 0):
            raise GroundStateError("descent left the region where the Nehari scaling exists")
        return v * (a / b) ** (1.0 / (p - 1.0))

    def nehari_energy(v):
        return (0.5 - 1.0 / (p + 1.0)) * float(v @ (d.A @ v))

    if project is not None:
        x = project(x)
    x = to_nehari(x)
    e = nehari_energy(x)
    tau = 1.0
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        Ax = d.A @ x
        grad = x - factor.solve(d.mass * nl.f(d.r, x))
        if project is not None:
            grad = project(grad)
        g2 = float(grad @ (d.A @ grad))
        gnorm = math.sqrt(g2 / float(x @ Ax))
        if gnorm <= gtol:
            return x, gnorm, it
        while True:
            trial = x - tau * grad
            if project is not None:
                trial = project(trial)
            try:
                trial = to_nehari(trial)
            except GroundStateError:
                trial = None
            if trial is not None:
                e_new = nehari_energy(trial)
                if e_new <= e - 1e-4 * tau * g2:
                    break
            tau *= 0.5
            if tau < 1e-12:
                return x, gnorm, it
        x, e = trial, e_new
        tau = min(1.0, 2.0 * tau)
    return x, gnorm, max_iter


def ground_state(
    spec: ProblemSpec,
    *,
    starts: tuple[str, ...] = STARTS,
    gtol: float = 1e-6,
    tol: float = 1e-9,
    max_iter: int = 3000,
    with_morse: bool = True,
) -> SolutionRecord:
    """Lowest-energy Nehari critical point over the configured starts.

    The "radial" start is kept in the theta-constant subspace throughout, so
    it always yields the best theta-constant competitor.  Ties within a
    relative 1e-9 go to the earlier start.
    """
    nl = spec.nonlinearity
    if not nl.homogeneous:
        raise ValueError("ground_state needs a superlinear power nonlinearity (p > 1)")
    if not spec.homogeneous_data:
        raise ValueError("ground_state needs zero Dirichlet data on the arcs")
    d = _Discrete(spec)
    radial = _radial_projector(spec.grid, d.lap.free)

    candidates = []
    best = None
    for name in starts:
        proj = radial if name == "radial" else None
        x0 = d.lap.restrict(start_field(spec.grid, name))
        entry: dict = {"start": name, "energy": None}
        try:
            x, gnorm, its = _nehari_descent(d, x0, gtol, max_iter, proj)
            entry["descent_iterations"] = its
            entry["gradient_norm"] = gnorm
            x, nrm, nits, trace = _newton(d, x, tol, 50, proj)
        except (NewtonError, GroundStateError, FactorizationError) as exc:
            entry["error"] = str(exc)
            log.info("start %s failed: %s", name, exc)
            candidates.append(entry)
            continue
        if np.sum(x) < 0:
            x = -x
        entry.update(energy=d.energy(x), residual=nrm, newton_iterations=nits, x=x, iterations=its + nits)
        candidates.append(entry)
        if best is None or (entry["energy"] < best["energy"] and not _tie(entry, best)):
            best = entry
    if best is None:
        raise GroundStateError(
            "all starts failed: " + "; ".join(f"{c['start']}: {c.get('error')}" for c in candidates)
        )
    sol = d.field(best["x"])
    public = [{k: v for k, v in c.items() if k != "x"} for c in candidates]
    rec = SolutionRecord(
        sol,
        best["residual"],
        best["energy"],
        spec,
        "ground_state",
        best["iterations"],
        [],
        candidates=public,
        notes={"winner": best["start"]},
    )
    if with_morse:
        attach_morse(rec)
    return rec


def _tie(a: dict, b: dict) -> bool:
    return abs(a["energy"] - b["energy"]) <= 1e-9 * abs(b["energy"])


# -- half-disc -> sector rescaling -------------------------------------------


def _lagrange_weights(x: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Lagrange basis weights; x has shape (...,), nodes shape (..., k)."""
    k = nodes.shape[-1]
    w = np.ones(nodes.shape)
    for a in range(k):
        for b in range(k):
            if a != b:
                w[..., a] *= (x - nodes[..., b]) / (nodes[..., a] - nodes[..., b])
    return w


def interpolate(u: ScalarField, r: np.ndarray, theta: np.ndarray, order: int = 4) -> np.ndarray:
    """Tensor Lagrange interpolation of a grid field at points (r, theta).

    ``order`` is the stencil width: 2 is bilinear, 4 is bicubic.  Angular
    stencils crossing an edge use the even reflection of the field; radial
    stencils are shifted inside the grid (one-sided near the ends).
    """
    g = u.grid
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    half = order // 2
    # radial stencil
    rn = g.r
    pos = np.interp(r, rn, np.arange(g.n_r), left=np.nan, right=np.nan)
    below = r < rn[0]
    pos = np.where(below, (r - rn[0]) / (rn[1] - rn[0]), pos)
    if np.any(np.isnan(pos)) or np.any(r > rn[-1] + 1e-12):
        raise ValueError("radial sample outside the source grid")
    i0 = np.clip(np.floor(pos).astype(int) - half + 1, 0, g.n_r - order)
    ri = i0[..., None] + np.arange(order)
    wr = _lagrange_weights(r, rn[ri])
    # angular stencil with even ghosts
    tpos = theta / g.h_theta
    j0 = np.floor(tpos).astype(int) - half + 1
    tj = j0[..., None] + np.arange(order)
    wt = _lagrange_weights(theta, tj * g.h_theta)
    fold = np.vectorize(lambda j: mirror_index(int(j), g.n_theta))(tj) if tj.size else tj
    vals = u.values
    out = np.zeros(r.shape)
    for a in range(order):
        for b in range(order):
            out += wr[..., a] * wt[..., b] * vals[ri[..., a], fold[..., b]]
    return out


def sector_rescale(
    sol: SolutionRecord | ScalarField,
    beta: float,
    p: float,
    alpha_exp: float,
    *,
    n_r: int | None = None,
    n_theta: int | None = None,
    order: int = 4,
) -> SolutionRecord:
    """v(rho, phi) = c u(rho**s, s*phi), s = pi/beta, c = s**(2/(p-1)).

    The source lives on the unit half-disc; the result is sampled on a sector
    of opening ``beta`` and its residual is measured for the weighted power
    problem with weight exponent (alpha_exp + 2) s - 2.
    """
    src = sol.field if isinstance(sol, SolutionRecord) else sol
    g = src.grid
    if g.cartesian or not g.staggered or abs(g.beta - math.pi) > 1e-12 or g.dom.r_outer != 1.0:
        raise ValueError("source must live on the unit half-disc sector (r_outer = 1, beta = pi)")
    if not p > 1.0:
        raise ValueError("need p > 1")
    s = math.pi / beta
    c = s ** (2.0 / (p - 1.0))
    tgt = PolarGrid(SectorDomain(0.0, 1.0, beta), n_r or g.n_r, n_theta or g.n_theta)
    rho, phi = tgt.mesh()
    vals = c * interpolate(src, rho**s, s * phi, order=order)
    vals[-1, :] = 0.0
    v = ScalarField(tgt, vals)
    spec = ProblemSpec(tgt, Nonlinearity.power((alpha_exp + 2.0) * s - 2.0, p))
    d = _Discrete(spec)
    x = d.lap.restrict(v)
    notes = {"rescale.c": repr(c), "rescale.s": repr(s), "rescale.order": str(order)}
    # mapped radial spacing near the outer arc versus the source spacing
    mapped = s * tgt.h_r
    if mapped < 0.25 * g.h_r or s * tgt.h_theta < 0.25 * g.h_theta:
        notes["rescale.flag"] = "target finer than the source can resolve"
    return SolutionRecord(v, d.norm(d.residual(x)), d.energy(x), spec, "rescale", notes=notes)
