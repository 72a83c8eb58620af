"""Numerical verification of essentially conformally symmetric metrics.

Modules
-------
chartcalc   curvature engine on one coordinate chart
d1family    metrics with one-dimensional Olszak distribution
d2family    Riemann extensions with two-dimensional Olszak distribution
olszak      the Olszak distribution and rank-one Weyl structure
riccati     periodic Riccati septuples and their spectra
lattice     translation operators, the integrality gate and the group action
cli         command-line front end
"""

from __future__ import annotations

from .chartcalc import (
    ChartDomainError,
    CurvaturePack,
    DegenerateMetricError,
    MetricField,
    ToleranceProfile,
    curvature_pack,
    survey,
)
from .d1family import D1Data, InvalidDataError, build_metric
from .d2family import D2Data, SurfaceConnection, build_d2_metric
from .kernels import BACKEND
from .lattice import CompactnessCertificate, certify_compact
from .olszak import DistributionFiber, olszak_fiber, rank_one_weyl_witness
from .riccati import KLPair, Septuple, SpectralTriple, roots_of_P, solve_septuple, spec

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChartDomainError",
    "CompactnessCertificate",
    "CurvaturePack",
    "D1Data",
    "D2Data",
    "DegenerateMetricError",
    "DistributionFiber",
    "InvalidDataError",
    "KLPair",
    "MetricField",
    "Septuple",
    "SpectralTriple",
    "SurfaceConnection",
    "ToleranceProfile",
    "build_d2_metric",
    "build_metric",
    "certify_compact",
    "curvature_pack",
    "olszak_fiber",
    "rank_one_weyl_witness",
    "roots_of_P",
    "solve_septuple",
    "spec",
    "survey",
]
