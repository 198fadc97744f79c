"""Semilinear elliptic problems on planar sectors with mixed boundary conditions."""

from .analysis import ClassificationReport, RotatingPlaneReport, Verdict, classify, rotating_plane, verify_utheta_equation
from .discretization import (
    OperatorSet,
    PolarGrid,
    ScalarField,
    Space,
    assemble_laplacian,
    assemble_linearized,
    quadratic_form,
    read_field,
    theta_derivative,
    write_field,
)
from .domain import CylCoord, RectDomain, SectorDomain, classify_boundary, extend_even, reflect
from .kernels import BACKEND
from .nonlinear import Nonlinearity, ProblemSpec, SolutionRecord, energy, ground_state, newton_solve, sector_rescale
from .special import bessel_j, bessel_zero, critical_angle, eigen_catalog
from .spectral import MorseReport, Spectrum, morse_index, smallest_eigenpairs, splitting_inequality_check

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ClassificationReport",
    "CylCoord",
    "MorseReport",
    "Nonlinearity",
    "OperatorSet",
    "PolarGrid",
    "ProblemSpec",
    "RectDomain",
    "RotatingPlaneReport",
    "ScalarField",
    "SectorDomain",
    "SolutionRecord",
    "Space",
    "Spectrum",
    "Verdict",
    "assemble_laplacian",
    "assemble_linearized",
    "bessel_j",
    "bessel_zero",
    "classify",
    "classify_boundary",
    "critical_angle",
    "eigen_catalog",
    "energy",
    "extend_even",
    "ground_state",
    "morse_index",
    "newton_solve",
    "quadratic_form",
    "read_field",
    "reflect",
    "rotating_plane",
    "sector_rescale",
    "smallest_eigenpairs",
    "splitting_inequality_check",
    "theta_derivative",
    "verify_utheta_equation",
    "write_field",
]
