"""Cheat-penalised point games: search, validity checking and conversion to protocols."""

from .baselines import BaselineResult, abdr_reward, compare_table, ddb_asymptotic, ddb_reward, sr_solve
from .convert import (BoundaryDecomposition, ConversionParams, ConversionReport, TdpgExpansion,
                      admissible_c1, conversion_params, conversion_report, decompose_boundary,
                      expand_tdpg, tradeoff_curve)
from .core import Boundary, Configuration, Move, PointMass
from .gamefile import GameFile, builtin, golden, load, save
from .profile import GridSpec, kernel, kernel_matrix, svd_primed
from .search import PenTipg, SearchConfig, run_search
from .validity import ValidityReport, check_h_valid, check_transition, check_v_valid, check_valid_1d

__version__ = "0.1.0"

__all__ = [
    "BaselineResult", "Boundary", "BoundaryDecomposition", "Configuration", "ConversionParams",
    "ConversionReport", "GameFile", "GridSpec", "Move", "PenTipg", "PointMass", "SearchConfig",
    "TdpgExpansion", "ValidityReport", "abdr_reward", "admissible_c1", "builtin", "check_h_valid",
    "check_transition", "check_v_valid", "check_valid_1d", "compare_table", "conversion_params",
    "conversion_report", "ddb_asymptotic", "ddb_reward", "decompose_boundary", "expand_tdpg",
    "golden", "kernel", "kernel_matrix", "load", "run_search", "save", "sr_solve", "svd_primed",
    "tradeoff_curve",
]
