"""Cumulants of the quartic U(N) vector model by three mutually checking routes.

* :mod:`mlvec.oracle`: exact one-dimensional sigma quadrature (and a phi-space
  Monte Carlo cross-check);
* :mod:`mlvec.series`: exact Wick coefficients in ``g`` and Borel-Pade sums;
* :mod:`mlvec.lve`: the multiscale two-level tree expansion, with
  :mod:`mlvec.scan` probing its convergence domain in complex ``g``.
"""
from __future__ import annotations

from .errors import (BoundViolated, BranchCut, CapExceeded, CubatureNoConverge, DegeneratePade,
                     IllConditioned, MLVEError, NotPSD, OrderTooHigh, PoleHit,
                     QuadratureNoConverge, UnbalancedMonomial)
from .forests import (Jungle, WScheme, bkar_exactness_check, enumerate_forests, enumerate_jungles,
                      spanning_trees)
from .grassmann import brute_force_oracle, chi, chibar, grassmann_gaussian
from .lve import CumulantResult, cumulant_lve, reexpand_in_g
from .model import (DEFAULT_RHO, CouplingPoint, ExternalMomenta, SliceConfig,
                    check_resolvent_bound, in_cardioid)
from .oracle import cumulant_oracle, mc_cross_check
from .replica import GaussScheme
from .scan import ScanTable, cardioid_scan, uniformity_probe
from .series import SeriesCoefficients, borel_pade_sum, wick_coefficients

__version__ = "0.1.0"

__all__ = [
    "BoundViolated", "BranchCut", "CapExceeded", "CubatureNoConverge", "DegeneratePade",
    "IllConditioned", "MLVEError", "NotPSD", "OrderTooHigh", "PoleHit", "QuadratureNoConverge",
    "UnbalancedMonomial",
    "Jungle", "WScheme", "bkar_exactness_check", "enumerate_forests", "enumerate_jungles",
    "spanning_trees",
    "brute_force_oracle", "chi", "chibar", "grassmann_gaussian",
    "CumulantResult", "cumulant_lve", "reexpand_in_g",
    "DEFAULT_RHO", "CouplingPoint", "ExternalMomenta", "SliceConfig", "check_resolvent_bound",
    "in_cardioid",
    "cumulant_oracle", "mc_cross_check",
    "GaussScheme",
    "ScanTable", "cardioid_scan", "uniformity_probe",
    "SeriesCoefficients", "borel_pade_sum", "wick_coefficients",
]
