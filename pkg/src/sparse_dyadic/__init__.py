"""Sparse domination of vector-valued singular integrals on translated dyadic grids."""

from .cz_operator import KernelSpec, apply_T, kernel_bounds_check, kernel_eval
from .domination import A2Experiment, DominationReport, a2_experiment, dominate, oscillation_kernel_report
from .dyadic_grid import Box, DyadicCube, ancestor, children, dilate, shifted_cover
from .lerner import SparseCollection, decompose, verify_decomposition
from .oscillation import least_bound, pseudomedian, scalar_median
from .sampled_field import CellSet, GridSpec, SampledFunction
from .shift_ops import GeneralShiftSpec, ShiftSpec, apply_A, apply_general
from .weights import Weight, a_infty_characteristic, ap_characteristic, dual_weight, maximal_function

__all__ = [
    "A2Experiment", "Box", "CellSet", "DominationReport", "DyadicCube", "GeneralShiftSpec", "GridSpec",
    "KernelSpec", "SampledFunction", "ShiftSpec", "SparseCollection", "Weight",
    "a2_experiment", "a_infty_characteristic", "ancestor", "ap_characteristic", "apply_A", "apply_T",
    "apply_general", "children", "decompose", "dilate", "dominate", "dual_weight", "kernel_bounds_check",
    "kernel_eval", "least_bound", "maximal_function", "oscillation_kernel_report", "pseudomedian",
    "scalar_median", "shifted_cover", "verify_decomposition",
]
