"""Geometric quantiles on hyperbolic space (hyperboloid model)."""

from .analysis import (Contour, DirectionSet, MeasuresReport, OutlierResult, TRFrame,
                       isoquantile_contour, measures, outliers_extreme, outliers_fence,
                       select_tr_frame, tangent_rank, tr_contour)
from .datagen import FAMILIES, GenSpec, generate, generate_all
from .geometry import BoundaryDir
from .solver import (CoincidenceError, ConvergenceError, Dataset, QuantileSpec, SolveResult,
                     SolverConfig, frechet_mean, frechet_median, grad_rho, loss_rho, psi,
                     sample_quantile, sample_quantiles)

__version__ = "0.1.0"

__all__ = [
    "BoundaryDir", "CoincidenceError", "Contour", "ConvergenceError", "Dataset", "DirectionSet",
    "FAMILIES", "GenSpec", "MeasuresReport", "OutlierResult", "QuantileSpec", "SolveResult",
    "SolverConfig", "TRFrame", "frechet_mean", "frechet_median", "generate", "generate_all",
    "grad_rho", "isoquantile_contour", "loss_rho", "measures", "outliers_extreme", "outliers_fence",
    "psi", "sample_quantile", "sample_quantiles", "select_tr_frame", "tangent_rank", "tr_contour",
]
