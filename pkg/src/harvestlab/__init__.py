"""Numerical entanglement harvesting for two parallel-accelerated detectors."""

from .physics import (
    HarvestParams,
    InvalidParams,
    Observables,
    PhysicalParams,
    eval_E,
    eval_E_sp,
    eval_X,
    eval_X_sp,
    evaluate,
    negativity,
    sp_entangled,
    to_dimensionless,
)
from .quadrature import QuadConfig, QuadResult, Strategy, integrate_1d, integrate_2d

__version__ = "0.1.0"
