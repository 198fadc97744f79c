"""Finite-volume realisation of -Laplacian on tensor polar (or rectangle) grids.

Node layout: radial index i (or the x2 index for the rectangle), angular
index j, flattened row-major as i * n_theta + j.  The angular edges
theta = 0 and theta = beta lie on grid columns and carry the homogeneous
Neumann condition through half control volumes, which is the same as an even
ghost reflection.  Dirichlet arcs sit on the first/last radial rows and are
eliminated.  For the disc sector the first radial node is staggered to
h_r/2, so there is no node at the vertex and no flux through it.

The assembled stiffness is symmetric; the lumped mass is the exact control
volume area r_i h_r h_theta w_j with w_j = 1/2 on the edge columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .domain import RectDomain, SectorDomain
from .sparse import CSRMatrix

__all__ = [
    "FieldFormatError",
    "OperatorSet",
    "PolarGrid",
    "ScalarField",
    "Space",
    "assemble_laplacian",
    "assemble_linearized",
    "constant_potential",
    "nodal_mass",
    "quadratic_form",
    "read_field",
    "theta_derivative",
    "write_field",
]


class FieldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PolarGrid:
    dom: SectorDomain | RectDomain
    n_r: int
    n_theta: int

    def __post_init__(self):
        if self.n_r < 3 or self.n_theta < 3:
            raise ValueError(f"grid needs n_r, n_theta >= 3, got {self.n_r} x {self.n_theta}")

    @property
    def cartesian(self) -> bool:
        return isinstance(self.dom, RectDomain)

    @property
    def beta(self) -> float:
        return self.dom.beta

    @property
    def staggered(self) -> bool:
        return not self.cartesian and self.dom.is_disc

    @cached_property
    def h_r(self) -> float:
        if self.cartesian:
            return self.dom.width / (self.n_r - 1)
        if self.staggered:
            return self.dom.r_outer / (self.n_r - 0.5)
        return (self.dom.r_outer - self.dom.r_inner) / (self.n_r - 1)

    @cached_property
    def h_theta(self) -> float:
        return self.beta / (self.n_theta - 1)

    @cached_property
    def r(self) -> np.ndarray:
        i = np.arange(self.n_r, dtype=float)
        if self.cartesian:
            return i * self.h_r
        if self.staggered:
            r = (i + 0.5) * self.h_r
            r[-1] = self.dom.r_outer
            return r
        r = self.dom.r_inner + i * self.h_r
        r[-1] = self.dom.r_outer
        return r

    @cached_property
    def theta(self) -> np.ndarray:
        t = np.arange(self.n_theta) * self.h_theta
        t[-1] = self.beta
        return t

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_theta)

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @cached_property
    def h(self) -> float:
        """Mesh size used for O(h^2) tolerances."""
        reach = 1.0 if self.cartesian else self.dom.r_outer
        return max(self.h_r, reach * self.h_theta)

    @cached_property
    def metric(self) -> np.ndarray:
        """Radial metric factor: r for polar grids, 1 for the rectangle."""
        return np.ones(self.n_r) if self.cartesian else self.r.copy()

    @cached_property
    def column_weights(self) -> np.ndarray:
        w = np.ones(self.n_theta)
        w[0] = w[-1] = 0.5
        return w

    @cached_property
    def dirichlet_rows(self) -> tuple[int, ...]:
        return (self.n_r - 1,) if self.staggered else (0, self.n_r - 1)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def same_as(self, other: "PolarGrid") -> bool:
        return self.dom == other.dom and self.shape == other.shape

    def snap_alpha(self, alpha: float) -> tuple[int, float]:
        """Nearest interior column to the angle ``alpha`` and the mismatch."""
        col = int(round(alpha / self.h_theta))
        col = min(max(col, 1), self.n_theta - 2)
        return col, abs(self.theta[col] - alpha)


@dataclass(frozen=True)
class Space:
    """Admissible space: Dirichlet on the arcs plus the listed grid columns."""

    name: str
    dirichlet_columns: tuple[int, ...] = ()

    @classmethod
    def gamma(cls) -> "Space":
        return cls("H1_gamma")

    @classmethod
    def zero(cls, grid: PolarGrid) -> "Space":
        return cls("H1_0", (0, grid.n_theta - 1))

    @classmethod
    def split(cls, column: int) -> "Space":
        return cls(f"H1_gamma+alpha[{column}]", (column,))

    @classmethod
    def parse(cls, text: str, grid: PolarGrid) -> "Space":
        text = text.strip()
        if text == "H1_gamma":
            return cls.gamma()
        if text == "H1_0":
            return cls.zero(grid)
        if text.startswith("H1_gamma+alpha[") and text.endswith("]"):
            return cls.split(int(text[len("H1_gamma+alpha[") : -1]))
        raise ValueError(f"unknown space tag {text!r}")

    def __str__(self):
        return self.name


@dataclass
class ScalarField:
    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.size != self.grid.size:
            raise ValueError(f"field has {v.size} values, grid needs {self.grid.size}")
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    @classmethod
    def from_function(cls, grid: PolarGrid, func) -> "ScalarField":
        rr, tt = grid.mesh()
        return cls(grid, np.broadcast_to(func(rr, tt), grid.shape).copy())

    @classmethod
    def zeros(cls, grid: PolarGrid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass(frozen=True)
class Laplacian:
    grid: PolarGrid
    space: Space
    A: CSRMatrix  # free x free stiffness
    mass: np.ndarray  # lumped mass on free nodes
    free: np.ndarray  # flat node indices of the free set, ascending
    full: CSRMatrix = field(repr=False)  # stiffness on all nodes, Neumann everywhere

    @property
    def M(self) -> CSRMatrix:
        return CSRMatrix.diag(self.mass)

    @cached_property
    def fixed(self) -> np.ndarray:
        mask = np.ones(self.grid.size, dtype=bool)
        mask[self.free] = False
        return np.flatnonzero(mask)

    def restrict(self, field: ScalarField) -> np.ndarray:
        return field.flat[self.free]

    def prolong(self, vec, fill: ScalarField | None = None) -> ScalarField:
        out = np.zeros(self.grid.size) if fill is None else fill.flat.copy()
        out[self.free] = vec
        return ScalarField(self.grid, out)

    def lift(self, boundary: ScalarField) -> np.ndarray:
        """Stiffness coupling of the prescribed nodal values into free rows."""
        g = np.zeros(self.grid.size)
        g[self.fixed] = boundary.flat[self.fixed]
        return (self.full @ g)[self.free]


def _full_stiffness(grid: PolarGrid) -> tuple[CSRMatrix, np.ndarray]:
    n_r, n_t = grid.shape
    h_r, h_t = grid.h_r, grid.h_theta
    rho = grid.metric
    w = grid.column_weights
    idx = np.arange(grid.size).reshape(n_r, n_t)

    if grid.cartesian:
        rho_face = np.ones(n_r - 1)
    else:
        rho_face = grid.r[:-1] + 0.5 * np.diff(grid.r)
    # radial edges (i, j) -- (i+1, j)
    c_rad = (rho_face[:, None] * h_t * w[None, :] / np.diff(grid.r)[:, None]).ravel()
    a_rad = idx[:-1, :].ravel()
    b_rad = idx[1:, :].ravel()
    # angular edges (i, j) -- (i, j+1)
    c_ang = np.repeat(h_r / (rho * h_t), n_t - 1)
    a_ang = idx[:, :-1].ravel()
    b_ang = idx[:, 1:].ravel()

    a = np.concatenate([a_rad, a_ang])
    b = np.concatenate([b_rad, b_ang])
    c = np.concatenate([c_rad, c_ang])
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([c, c, -c, -c])
    K = CSRMatrix.from_triplets(rows, cols, vals, grid.size, symmetric=True)
    return K, nodal_mass(grid)


def assemble_laplacian(grid: PolarGrid, space: Space | str = "H1_gamma") -> Laplacian:
    """Stiffness, lumped mass and free-node map for the given space."""
    if isinstance(space, str):
        space = Space.parse(space, grid)
    for col in space.dirichlet_columns:
        if not 0 <= col < grid.n_theta:
            raise ValueError(f"Dirichlet column {col} outside the grid")
    K, mass = _full_stiffness(grid)
    fixed = np.zeros(grid.shape, dtype=bool)
    fixed[list(grid.dirichlet_rows), :] = True
    if space.dirichlet_columns:
        fixed[:, list(space.dirichlet_columns)] = True
    free = np.flatnonzero(~fixed.ravel())
    A = K.submatrix(free)
    return Laplacian(grid, space, A, mass[free], free, K)


@dataclass(frozen=True)
class OperatorSet:
    """Stiffness A, lumped mass M and potential V realising A - M V."""

    lap: Laplacian
    potential: np.ndarray

    @property
    def grid(self) -> PolarGrid:
        return self.lap.grid

    @property
    def space(self) -> Space:
        return self.lap.space

    @property
    def A(self) -> CSRMatrix:
        return self.lap.A

    @property
    def mass(self) -> np.ndarray:
        return self.lap.mass

    @property
    def n(self) -> int:
        return self.lap.free.size

    def operator(self) -> CSRMatrix:
        """The symmetric matrix A - M V on free nodes."""
        return self.lap.A.add_diagonal(-self.lap.mass * self.potential)

    def apply(self, vec) -> np.ndarray:
        return self.lap.A @ vec - self.lap.mass * self.potential * vec

    def potential_full(self) -> np.ndarray:
        """Potential on all grid nodes (zero where eliminated)."""
        full = np.zeros(self.grid.size)
        full[self.lap.free] = self.potential
        return full

    def with_space(self, space: Space | str) -> "OperatorSet":
        """Same potential, another space; the new free set must not be larger."""
        lap = assemble_laplacian(self.grid, space)
        if not np.isin(lap.free, self.lap.free).all():
            raise ValueError(f"potential unknown on nodes freed by {lap.space}")
        return OperatorSet(lap, self.potential_full()[lap.free])


def potential_field(grid: PolarGrid, u: ScalarField | None, fprime) -> np.ndarray:
    """Nodal values f'(r_i, u_ij) on the whole grid."""
    rr, _ = grid.mesh()
    uu = np.zeros(grid.shape) if u is None else u.values
    if hasattr(fprime, "fprime"):
        fprime = fprime.fprime
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(fprime(rr, uu), dtype=float), grid.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise ValueError(
            f"f' is not finite at node (i={i}, j={j}), r={grid.r[i]:.6g}, "
            f"theta={grid.theta[j]:.6g}, u={uu[i, j]:.6g}"
        )
    return vals.copy()


def assemble_linearized(
    grid: PolarGrid, u: ScalarField | None, fprime, space: Space | str = "H1_gamma"
) -> OperatorSet:
    """OperatorSet for L_u = -Laplacian - f'(r, u) in the given space.

    ``fprime`` is a callable f'(r, u) or an object exposing ``.fprime``.
    """
    lap = assemble_laplacian(grid, space)
    V = potential_field(grid, u, fprime).reshape(-1)[lap.free]
    return OperatorSet(lap, V)


def constant_potential(grid: PolarGrid, value: float, space: Space | str = "H1_gamma") -> OperatorSet:
    lap = assemble_laplacian(grid, space)
    return OperatorSet(lap, np.full(lap.free.size, float(value)))


def quadratic_form(ops: OperatorSet, v: ScalarField) -> float:
    """v^T (A - M V) v over free nodes; v must vanish on eliminated nodes."""
    flat = v.flat
    fixed = ops.lap.fixed
    if fixed.size:
        scale = max(1.0, float(np.abs(flat).max()))
        worst = float(np.abs(flat[fixed]).max())
        if worst > 1e-12 * scale:
            raise ValueError(
                f"field violates the Dirichlet constraints of {ops.space} (max |v| = {worst:.3e})"
            )
    x = flat[ops.lap.free]
    return float(x @ ops.apply(x))


def theta_derivative(v: ScalarField) -> ScalarField:
    """Centred angular difference; the Neumann edge columns give exactly 0."""
    vals = v.values
    out = np.zeros_like(vals)
    out[:, 1:-1] = (vals[:, 2:] - vals[:, :-2]) / (2.0 * v.grid.h_theta)
    return ScalarField(v.grid, out)


def nodal_mass(grid: PolarGrid) -> np.ndarray:
    """Lumped control-volume areas of every node, flattened."""
    return (grid.metric[:, None] * grid.h_r * grid.h_theta * grid.column_weights[None, :]).ravel()


# -- field file format -------------------------------------------------------


def format_header(grid: PolarGrid) -> str:
    if grid.cartesian:
        return f"RECT {grid.n_r} {grid.n_theta} 0 {grid.dom.width!r} {grid.dom.beta!r}"
    d = grid.dom
    return f"SECTOR {grid.n_r} {grid.n_theta} {d.r_inner!r} {d.r_outer!r} {d.beta!r}"


def write_field(path, field: ScalarField) -> None:
    lines = [format_header(field.grid)]
    lines.extend(repr(float(x)) for x in field.flat)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_header(line: str) -> PolarGrid:
    parts = line.split()
    if len(parts) != 6 or parts[0] not in ("SECTOR", "RECT"):
        raise FieldFormatError(f"bad field header {line!r}")
    try:
        n_r, n_t = int(parts[1]), int(parts[2])
        a, b, beta = (float(x) for x in parts[3:])
    except ValueError as exc:
        raise FieldFormatError(f"bad field header {line!r}: {exc}") from None
    if parts[0] == "RECT":
        return PolarGrid(RectDomain(beta, b), n_r, n_t)
    return PolarGrid(SectorDomain(a, b, beta), n_r, n_t)


def read_field(path) -> ScalarField:
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FieldFormatError(f"{path}: empty field file")
    grid = parse_header(lines[0])
    body = lines[1:]
    if len(body) != grid.size:
        raise FieldFormatError(f"{path}: expected {grid.size} values, found {len(body)}")
    try:
        vals = np.array([float(x) for x in body])
    except ValueError as exc:
        raise FieldFormatError(f"{path}: {exc}") from None
    if not np.all(np.isfinite(vals)):
        raise FieldFormatError(f"{path}: non-finite value")
    return ScalarField(grid, vals)
