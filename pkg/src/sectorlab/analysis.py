"""Angular symmetry diagnostics for solutions on sector grids."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .discretization import OperatorSet, ScalarField, assemble_linearized, theta_derivative
from .domain import mirror_index
from .nonlinear import Nonlinearity, SolutionRecord
from .spectral import default_zero_tol, morse_index, smallest_eigenpairs

__all__ = [
    "ClassificationReport",
    "RotatingPlaneReport",
    "Verdict",
    "classify",
    "difference_field",
    "read_report",
    "read_sweep_csv",
    "rotating_plane",
    "verify_utheta_equation",
    "write_report",
    "write_sweep_csv",
]

C_CONST = 10.0
ALIGNMENT_MIN = 0.99
CLUSTER_MAX = 16


class Verdict(str, enum.Enum):
    THETA_CONSTANT = "ThetaConstant"
    STRICTLY_MONOTONE = "StrictlyMonotone"
    INCONSISTENT = "Inconsistent"


def _free_rows(grid) -> np.ndarray:
    rows = np.ones(grid.n_r, dtype=bool)
    rows[list(grid.dirichlet_rows)] = False
    return rows


def difference_field(u: ScalarField, column: int) -> np.ndarray:
    """w(i, j) = u(i, sigma(j)) - u(i, j) for the reflection about ``column``.

    Reflected columns falling outside [0, n_theta - 1] are folded back by the
    even extension across the Neumann edges.
    """
    n = u.grid.n_theta
    if not 0 <= column < n:
        raise ValueError(f"column {column} outside 0..{n - 1}")
    src = [mirror_index(2 * column - j, n) for j in range(n)]
    return u.values[:, src] - u.values


@dataclass(frozen=True)
class RotatingPlaneReport:
    alphas: np.ndarray
    columns: np.ndarray
    min_w: np.ndarray  # over interior columns 0 < j < a, free rows
    boundary_min: np.ndarray  # on the theta = 0 column, free rows
    max_w: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.alphas) <= 0):
            raise ValueError("alphas must be strictly increasing")


def rotating_plane(u: ScalarField, n_alpha: int | None = None) -> RotatingPlaneReport:
    """Sweep grid-aligned reflection angles and record minima of w_alpha on {theta < alpha}."""
    g = u.grid
    n = g.n_theta
    if n_alpha is None:
        cols = np.arange(1, n - 1)
    else:
        if n_alpha < 3:
            raise ValueError("n_alpha must be at least 3")
        cols = np.unique(np.round(np.linspace(1, n - 2, n_alpha)).astype(int))
    rows = _free_rows(g)
    mins, bmins, maxs = [], [], []
    for a in cols:
        w = difference_field(u, int(a))[rows]
        inner = w[:, 1:a]
        mins.append(inner.min() if inner.size else 0.0)
        maxs.append(inner.max() if inner.size else 0.0)
        bmins.append(w[:, 0].min())
    return RotatingPlaneReport(
        g.theta[cols].copy(), cols, np.array(mins), np.array(bmins), np.array(maxs)
    )


def verify_utheta_equation(u: ScalarField, ops: OperatorSet) -> float:
    """M^{-1}-norm of L_u applied to u_theta on the H1_0 free nodes."""
    ops0 = ops if ops.space.name == "H1_0" else ops.with_space("H1_0")
    x = ops0.lap.restrict(theta_derivative(u))
    res = ops0.apply(x)
    return float(np.sqrt(np.sum(res * res / ops0.mass)))


@dataclass
class ClassificationReport:
    verdict: Verdict
    utheta_min: float
    utheta_max: float
    lambda1_gamma: float
    lambda2_gamma: float
    lambda1_dirichlet: float
    utheta_alignment: float
    morse_index: int
    zero_modes: int
    zero_tol: float
    theta_tol: float
    utheta_residual: float
    direction: int = 0  # +1 increasing in theta, -1 decreasing, 0 otherwise
    utheta_alignment_first: float = math.nan  # against the first H1_0 eigenvector alone
    dirichlet_cluster: int = 1  # H1_0 eigenvalues within zero_tol of the lowest
    lambda3_gamma: float = math.nan
    implications: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, Verdict):
                v = v.value
            elif isinstance(v, float):
                v = repr(v)
            elif isinstance(v, list):
                v = " | ".join(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ClassificationReport":
        raw = {}
        for line in text.splitlines():
            if line.strip():
                k, _, v = line.partition("=")
                raw[k] = v
        kw = {}
        for f in fields(cls):
            if f.name not in raw:
                continue
            v = raw[f.name]
            if f.name == "verdict":
                kw[f.name] = Verdict(v)
            elif f.name in ("implications", "flags"):
                kw[f.name] = [s for s in v.split(" | ") if s]
            elif f.name in ("morse_index", "zero_modes", "direction", "dirichlet_cluster"):
                kw[f.name] = int(v)
            else:
                kw[f.name] = float(v)
        return cls(**kw)


def classify(
    sol: SolutionRecord | ScalarField,
    nonlinearity: Nonlinearity | None = None,
    *,
    c_const: float = C_CONST,
    zero_tol: float | None = None,
    alignment_min: float = ALIGNMENT_MIN,
    eig_tol: float = 1e-7,
) -> ClassificationReport:
    """Decide between theta-constant, strictly monotone in theta, or neither."""
    if isinstance(sol, SolutionRecord):
        u = sol.field
        nl = nonlinearity or sol.spec.nonlinearity
    else:
        if nonlinearity is None:
            raise ValueError("a bare field needs its nonlinearity")
        u, nl = sol, nonlinearity
    g = u.grid
    scale = float(np.abs(u.values).max())
    theta_tol = c_const * g.h**2 * max(scale, 1e-300)

    ut = theta_derivative(u).values[_free_rows(g)][:, 1:-1]
    ut_min, ut_max = float(ut.min()), float(ut.max())

    ops = assemble_linearized(g, u, nl, "H1_gamma")
    ztol = default_zero_tol(ops) if zero_tol is None else zero_tol
    spec_g = smallest_eigenpairs(ops, min(3, ops.n), eig_tol)
    morse = morse_index(spec_g, ztol)
    ops0 = ops.with_space("H1_0")
    # eigenvalues closer than zero_tol to the lowest one are not resolved
    # individually, so u_theta is compared with that whole bottom cluster
    m0 = 4
    while True:
        spec_0 = smallest_eigenpairs(ops0, min(m0, ops0.n), eig_tol)
        lam_0 = spec_0.eigenvalues
        lam0 = float(lam_0[0])
        cluster = int(np.sum(lam_0 <= lam0 + ztol))
        if cluster < lam_0.size or m0 >= CLUSTER_MAX or m0 >= ops0.n:
            break
        m0 *= 2

    x = ops0.lap.restrict(theta_derivative(u))
    xx = float(x @ (ops0.mass * x))
    coef = spec_0.vectors.T @ (ops0.mass * x)  # vectors are M-orthonormal
    align_first = float(coef[0] ** 2 / xx) if xx > 0 else 0.0
    align = float(np.sum(coef[:cluster] ** 2) / xx) if xx > 0 else 0.0
    resid = verify_utheta_equation(u, ops)

    lam = spec_g.eigenvalues
    report = ClassificationReport(
        verdict=Verdict.INCONSISTENT,
        utheta_min=ut_min,
        utheta_max=ut_max,
        lambda1_gamma=float(lam[0]),
        lambda2_gamma=float(lam[1]) if lam.size > 1 else math.nan,
        lambda3_gamma=float(lam[2]) if lam.size > 2 else math.nan,
        lambda1_dirichlet=lam0,
        utheta_alignment=align,
        utheta_alignment_first=align_first,
        dirichlet_cluster=cluster,
        morse_index=morse.index,
        zero_modes=morse.zero_modes,
        zero_tol=float(ztol),
        theta_tol=float(theta_tol),
        utheta_residual=resid,
    )

    amp = max(abs(ut_min), abs(ut_max))
    increasing = ut_min >= -theta_tol
    decreasing = ut_max <= theta_tol
    if amp <= theta_tol:
        report.verdict = Verdict.THETA_CONSTANT
        if 0.5 * theta_tol < amp:
            report.flags.append("borderline: max|u_theta| within a factor 2 of the constancy threshold")
    elif (increasing or decreasing) and abs(lam0) <= ztol and align >= alignment_min:
        report.verdict = Verdict.STRICTLY_MONOTONE
        report.direction = 1 if increasing else -1
        if abs(lam0) > 0.5 * ztol:
            report.flags.append("borderline: lambda1(H1_0) near the zero tolerance")
    else:
        if not (increasing or decreasing):
            report.implications.append("u_theta changes sign: Morse index >= 2 in H1_gamma expected")
        if abs(lam0) > ztol:
            report.implications.append("lambda1(H1_0) is not zero at u")
        if align < alignment_min:
            report.implications.append("u_theta is not aligned with the first H1_0 eigenvector")
    if cluster > 1:
        report.flags.append(
            f"{cluster} H1_0 eigenvalues lie within zero_tol of the lowest; alignment uses their span"
        )
        if cluster == lam_0.size:
            report.flags.append("H1_0 cluster may extend past the computed eigenvalues")
    if lam.size > 2 and abs(lam[2] - lam[1]) < ztol:
        report.flags.append("lambda2 and lambda3 are within zero_tol; ordering not resolved")
    if morse.undercounted:
        report.flags.append("all computed eigenvalues negative; index may be undercounted")
    return report


# -- serialisation ------------------------------------------------------------


def write_report(path, report: ClassificationReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())


def read_report(path) -> ClassificationReport:
    with open(path, encoding="utf-8") as fh:
        return ClassificationReport.from_text(fh.read())


SWEEP_COLUMNS = ("alpha", "column", "min_w", "boundary_min", "max_w")


def sweep_csv_text(rep: RotatingPlaneReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for a, c, m, b, x in zip(rep.alphas, rep.columns, rep.min_w, rep.boundary_min, rep.max_w):
        w.writerow([repr(float(a)), int(c), repr(float(m)), repr(float(b)), repr(float(x))])
    return buf.getvalue()


def write_sweep_csv(path, rep: RotatingPlaneReport) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(sweep_csv_text(rep))


def read_sweep_csv(path) -> RotatingPlaneReport:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != SWEEP_COLUMNS:
        raise ValueError(f"unexpected sweep columns {tuple(rows[0].keys())}")
    col = lambda k, t=float: np.array([t(r[k]) for r in rows])  # noqa: E731
    return RotatingPlaneReport(col("alpha"), col("column", int), col("min_w"), col("boundary_min"), col("max_w"))
