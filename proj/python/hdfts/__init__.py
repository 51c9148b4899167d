"""Sparse additive models for high-dimensional functional time series.

Thin Python layer over the C++ core: triangulations, bivariate Bernstein
bases, the two-level group-bridge solver, forecasting, tuning, and the
simulation utilities.
"""

from hdfts._hdfts import (
    BasisSpec,
    CoefficientSurface,
    DesignSystem,
    FitResult,
    FunctionalPanel,
    HdftsError,
    Model,
    RegionRecord,
    StandardizeTransform,
    Triangulation,
    assemble,
    eval_basis,
    fit,
    forecast,
    gen_far1,
    gen_panel,
    integrate_basis_against_curve,
    ise,
    mafe,
    mortality_weight,
    msfe,
    roughness_matrix,
    smooth_mortality,
    smoothness_matrix,
    standardize,
    tau,
    theta_update,
    triangulate_rect,
    tune,
    weighted_lasso,
)

__all__ = [
    "BasisSpec",
    "CoefficientSurface",
    "DesignSystem",
    "FitResult",
    "FunctionalPanel",
    "HdftsError",
    "Model",
    "RegionRecord",
    "StandardizeTransform",
    "Triangulation",
    "assemble",
    "eval_basis",
    "fit",
    "forecast",
    "gen_far1",
    "gen_panel",
    "integrate_basis_against_curve",
    "ise",
    "mafe",
    "mortality_weight",
    "msfe",
    "roughness_matrix",
    "smooth_mortality",
    "smoothness_matrix",
    "standardize",
    "tau",
    "theta_update",
    "triangulate_rect",
    "tune",
    "weighted_lasso",
]

__version__ = "0.1.0"
