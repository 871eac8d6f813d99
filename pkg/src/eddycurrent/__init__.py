"""Transient eddy-current fields on staggered box grids: discrete complex,
weighted forms, magnetic eigenbasis, Galerkin time stepping and estimate checks."""
from .grid import Complex, GridSpec, build_complex, restrict_interior
from .materials import MaterialModel, MaterialReport, layered, two_layer, validate
from .assembly import WeightedForms, assemble_forms, solve_spd
from .helmholtz import gaffney_ratio, neumann_decompose, weighted_dirichlet_decompose
from .eigenbase import EigenBasis, expand, harmonic_dimension, magnetic_eigenbasis, reconstruct
from .galerkin import (ReducedSystem, SourceSpec, Trajectory, lift_boundary, project_initial,
                       recover_E, reduce, solve, step, weak_residual)
from .analysis import (dual_norm, energy_identity_residual, holder_report, parabolic_residual,
                       verify_apriori)
from .regularity import campanato_seminorm, morrey_seminorm

__all__ = [
    "Complex", "GridSpec", "build_complex", "restrict_interior",
    "MaterialModel", "MaterialReport", "layered", "two_layer", "validate",
    "WeightedForms", "assemble_forms", "solve_spd",
    "gaffney_ratio", "neumann_decompose", "weighted_dirichlet_decompose",
    "EigenBasis", "expand", "harmonic_dimension", "magnetic_eigenbasis", "reconstruct",
    "ReducedSystem", "SourceSpec", "Trajectory", "lift_boundary", "project_initial",
    "recover_E", "reduce", "solve", "step", "weak_residual",
    "dual_norm", "energy_identity_residual", "holder_report", "parabolic_residual",
    "verify_apriori", "campanato_seminorm", "morrey_seminorm",
]

__version__ = "0.1.0"
