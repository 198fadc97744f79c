"""Low-lying eigenpairs of (A - M V) x = lambda M x and Morse indices."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .discretization import OperatorSet, ScalarField, Space, assemble_laplacian
from .sparse import BandFactor, CSRMatrix, FactorizationError

__all__ = [
    "EigenSolverError",
    "MorseReport",
    "SplitCheck",
    "Spectrum",
    "default_zero_tol",
    "gershgorin_lower_bound",
    "inertia_below",
    "mode_label",
    "morse_index",
    "read_spectrum_csv",
    "smallest_eigenpairs",
    "splitting_inequality_check",
    "write_spectrum_csv",
]

log = logging.getLogger(__name__)


class EigenSolverError(RuntimeError):
    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    vectors: np.ndarray  # free-node coordinates, M-orthonormal columns
    residuals: np.ndarray
    space: Space
    ops: OperatorSet | None = field(default=None, repr=False)
    iterations: int = 0
    shift: float = 0.0
    inertia_checked: bool = False

    def __len__(self):
        return self.eigenvalues.size

    def eigenvector(self, k: int) -> ScalarField:
        """k-th eigenvector (0-based) as a grid field, zero on eliminated nodes."""
        if self.ops is None:
            raise ValueError("spectrum carries no operator set to map back to the grid")
        return self.ops.lap.prolong(self.vectors[:, k])

    def near_degenerate(self, tol: float) -> list[tuple[int, int]]:
        """Consecutive index pairs whose eigenvalues differ by less than ``tol``."""
        lam = self.eigenvalues
        return [(k, k + 1) for k in range(lam.size - 1) if lam[k + 1] - lam[k] < tol]


@dataclass(frozen=True)
class MorseReport:
    index: int
    zero_modes: int
    zero_tol: float
    undercounted: bool = False
    inertia_index: int | None = None


def gershgorin_lower_bound(L: CSRMatrix, mass: np.ndarray) -> float:
    """Lower bound for the spectrum of the pencil (L, diag(mass)).

    Gershgorin discs of M^{-1} L, which is similar to the symmetric
    M^{-1/2} L M^{-1/2}.
    """
    rows, cols, vals = L.triplets()
    diag = np.zeros(L.n)
    off = np.zeros(L.n)
    on = rows == cols
    np.add.at(diag, rows[on], vals[on])
    np.add.at(off, rows[~on], np.abs(vals[~on]))
    return float(np.min((diag - off) / mass))


def default_zero_tol(ops: OperatorSet) -> float:
    vmax = float(np.abs(ops.potential).max()) if ops.potential.size else 0.0
    return 10.0 * ops.grid.h**2 * (vmax + 1.0)


def _m_orthonormalize(Y: np.ndarray, mass: np.ndarray) -> np.ndarray:
    T = Y.T @ (mass[:, None] * Y)
    s, U = np.linalg.eigh(0.5 * (T + T.T))
    keep = s > s.max() * 1e-13
    return Y @ (U[:, keep] / np.sqrt(s[keep]))


def _residual_norms(L, mass, X, lam) -> np.ndarray:
    R = L @ X - mass[:, None] * X * lam[None, :]
    return np.sqrt(np.sum(R * R / mass[:, None], axis=0))


def inertia_below(L: CSRMatrix, mass: np.ndarray, shift: float) -> int:
    """Number of eigenvalues of the pencil strictly below ``shift`` (Sylvester)."""
    return BandFactor(L.add_diagonal(-shift * mass)).negative


def lowest_pairs(
    L: CSRMatrix,
    mass: np.ndarray,
    m: int,
    tol: float = 1e-7,
    *,
    max_iter: int = 600,
    seed: int = 0,
    verify: bool = True,
):
    """Block shift-invert subspace iteration with locking.

    Returns (eigenvalues, vectors, residuals, iterations, shift, verified).
    """
    n = L.n
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= {n}, got m={m}")
    p = min(n, m + max(4, m // 2 + 2))
    bound = gershgorin_lower_bound(L, mass)
    sigma = bound - 1e-2 * (abs(bound) + 1.0)
    factor = BandFactor(L.add_diagonal(-sigma * mass))
    if factor.negative:
        raise EigenSolverError("Gershgorin shift failed to give a definite pencil")

    rng = np.random.default_rng(seed)
    X = _m_orthonormalize(rng.standard_normal((n, p)), mass)
    locked_vecs = np.zeros((n, 0))
    locked_vals: list[float] = []
    locked_res: list[float] = []
    res = np.full(p, np.inf)
    for it in range(1, max_iter + 1):
        Y = factor.solve(mass[:, None] * X)
        if locked_vecs.shape[1]:
            Y -= locked_vecs @ (locked_vecs.T @ (mass[:, None] * Y))
        Y = _m_orthonormalize(Y, mass)
        S = Y.T @ (L @ Y)
        theta, C = np.linalg.eigh(0.5 * (S + S.T))
        X = Y @ C
        res = _residual_norms(L, mass, X, theta)

        # lock converged leading Ritz pairs, in order
        k = 0
        while k < X.shape[1] and len(locked_vals) < m and res[k] <= tol:
            k += 1
        if k:
            locked_vecs = np.column_stack([locked_vecs, X[:, :k]])
            locked_vals.extend(theta[:k])
            locked_res.extend(res[:k])
            X = X[:, k:]
            if X.shape[1] == 0 and len(locked_vals) < m:
                X = _m_orthonormalize(rng.standard_normal((n, 1)), mass)
        if len(locked_vals) >= m:
            break

        if it >= 3 and (it % 5 == 3 or k) and X.shape[1] > 1:
            # move the shift up under the lowest active Ritz value; keep it
            # only if exactly the locked eigenvalues lie below it
            active = theta[k:]
            lo, spread = active[0], active[-1] - active[0]
            target = lo - max(0.05 * spread, res[k]) - 1e-9 * (abs(lo) + 1.0)
            for trial in (target, 0.5 * (sigma + target)):
                if trial <= sigma + 1e-3 * (lo - sigma):
                    break
                try:
                    cand = BandFactor(L.add_diagonal(-trial * mass))
                except FactorizationError:
                    continue
                if cand.negative == len(locked_vals):
                    sigma, factor = trial, cand
                    break
    else:
        done = len(locked_vals)
        shown = ", ".join(f"{v:.3e}" for v in res[: m - done])
        raise EigenSolverError(
            f"subspace iteration stopped after {max_iter} iterations with {done}/{m} "
            f"pairs converged; active residuals [{shown}]",
            residuals=res,
        )

    lam = np.array(locked_vals[:m])
    V = locked_vecs[:, :m]
    resid = np.array(locked_res[:m])
    order = np.argsort(lam, kind="stable")
    lam, V, resid = lam[order], V[:, order], resid[order]
    for c in range(m):
        col = V[:, c]
        big = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            V[:, c] = -col

    verified = False
    if verify and m < n:
        # just above the last eigenvalue: past its error bound, below the next
        # Ritz value (an upper bound for the next eigenvalue)
        nxt = theta[k] if k < theta.size else np.inf
        margin = max(10.0 * resid.max(), 1e-9 * (abs(lam[-1]) + 1.0))
        probe = lam[-1] + min(margin, 0.5 * max(nxt - lam[-1], 0.0)) if np.isfinite(nxt) else lam[-1] + margin
        try:
            below = inertia_below(L, mass, probe)
        except FactorizationError:
            below = None
        if below is not None:
            verified = True
            if below > m:
                raise EigenSolverError(
                    f"inertia count finds {below} eigenvalues below {probe:.6g} but only {m} "
                    "were computed; an eigenvalue was missed"
                )
    return lam, V, resid, it, sigma, verified


def smallest_eigenpairs(ops: OperatorSet, m: int, tol: float = 1e-7, **kw) -> Spectrum:
    """The ``m`` algebraically smallest eigenpairs of L_u in ``ops.space``."""
    lam, V, res, it, sigma, verified = lowest_pairs(ops.operator(), ops.mass, m, tol, **kw)
    return Spectrum(lam, V, res, ops.space, ops, it, sigma, verified)


def morse_index(spec: Spectrum, zero_tol: float | None = None) -> MorseReport:
    """Count eigenvalues below -zero_tol and those within zero_tol of zero."""
    if zero_tol is None:
        if spec.ops is None:
            raise ValueError("zero_tol required when the spectrum has no operator set")
        zero_tol = default_zero_tol(spec.ops)
    lam = spec.eigenvalues
    index = int(np.sum(lam < -zero_tol))
    zeros = int(np.sum(np.abs(lam) <= zero_tol))
    under = bool(lam.size and lam[-1] < -zero_tol)
    if under:
        log.warning("all %d computed eigenvalues are negative; Morse index may be undercounted", lam.size)
    inertia = None
    if spec.ops is not None:
        try:
            inertia = inertia_below(spec.ops.operator(), spec.ops.mass, -zero_tol)
        except FactorizationError:
            inertia = None
    return MorseReport(index, zeros, float(zero_tol), under, inertia)


@dataclass(frozen=True)
class SplitCheck:
    lhs: float  # lambda_2 on the whole sector
    rhs: float  # max of the two half-sector lambda_1
    holds: bool
    lam_left: float
    lam_right: float
    column: int
    alpha: float
    mismatch: float
    slack: float


def splitting_inequality_check(
    ops: OperatorSet, alpha: float, tol: float = 1e-8, slack_c: float = 1.0
) -> SplitCheck:
    """lambda_2 of the whole sector against the two half problems cut at alpha.

    The cut is a Dirichlet line on the grid column nearest to ``alpha``.
    """
    grid = ops.grid
    if not 0.0 < alpha < grid.beta:
        raise ValueError(f"alpha must lie strictly inside (0, {grid.beta}), got {alpha}")
    whole = ops if ops.space.name == "H1_gamma" else ops.with_space(Space.gamma())
    lhs = float(smallest_eigenpairs(whole, 2, tol).eigenvalues[1])

    col, mismatch = grid.snap_alpha(alpha)
    cut = assemble_laplacian(grid, Space.split(col))
    V = whole.potential_full()[cut.free]
    L = cut.A.add_diagonal(-cut.mass * V)
    cols_of_free = cut.free % grid.n_theta
    halves = []
    for side in (np.flatnonzero(cols_of_free < col), np.flatnonzero(cols_of_free > col)):
        sub = L.submatrix(side)
        halves.append(float(lowest_pairs(sub, cut.mass[side], 1, tol)[0][0]))
    rhs = max(halves)
    vmax = float(np.abs(whole.potential).max()) if whole.potential.size else 0.0
    slack = slack_c * grid.h**2 * (1.0 + vmax)
    return SplitCheck(lhs, rhs, lhs <= rhs + slack, halves[0], halves[1], col, float(grid.theta[col]), mismatch, slack)


def mode_label(v: ScalarField) -> tuple[int, int]:
    """(n, k) of a separable-looking mode: dominant cos(n pi theta / beta)
    component, k = radial sign changes of that component's profile + 1."""
    g = v.grid
    w = g.column_weights
    n_max = g.n_theta - 1
    basis = np.cos(np.outer(np.arange(n_max + 1), np.pi * g.theta / g.beta))
    norms = (basis * basis) @ w
    coef = (v.values * w[None, :]) @ basis.T / norms[None, :]  # (n_r, n)
    energy = np.sum(g.metric[:, None] * coef * coef * norms[None, :], axis=0)
    n = int(np.argmax(energy))
    prof = coef[:-1, n] if g.staggered else coef[1:-1, n]
    big = prof[np.abs(prof) > 1e-6 * np.abs(prof).max()]
    k = int(np.sum(np.sign(big[1:]) != np.sign(big[:-1]))) + 1
    return n, k


def write_spectrum_csv(path, spec: Spectrum) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,eigenvalue,residual\n")
        for k, (lam, res) in enumerate(zip(spec.eigenvalues, spec.residuals), 1):
            fh.write(f"{k},{float(lam)!r},{float(res)!r}\n")


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "index,eigenvalue,residual":
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    idx = [int(r[0]) for r in rows]
    if idx != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: indices not consecutive")
    return np.array([float(r[1]) for r in rows]), np.array([float(r[2]) for r in rows])
