"""Monodromy-preserving deformations driven by Loewner chains."""

from .errors import IsoLoewnerError, NumericalError, ValidationError
from .isomonodromy import LaxFamily, deform, diagonal_family, family_from_dict, random_family
from .loewner import DrivingKind, DrivingSpec, run_trajectory, sample_driving, sample_driving_batch
from .martingale import MCConfig, MCResult, mc_expectation, run_engine, step_observable
from .confluence import ConfluenceSpec, confluence_rate
from .verify import bpz_ladder, cross_module_suite, hormander_determinant, hormander_rank

__all__ = [
    "ConfluenceSpec",
    "DrivingKind",
    "DrivingSpec",
    "IsoLoewnerError",
    "LaxFamily",
    "MCConfig",
    "MCResult",
    "NumericalError",
    "ValidationError",
    "bpz_ladder",
    "confluence_rate",
    "cross_module_suite",
    "deform",
    "diagonal_family",
    "family_from_dict",
    "hormander_determinant",
    "hormander_rank",
    "mc_expectation",
    "random_family",
    "run_engine",
    "run_trajectory",
    "sample_driving",
    "sample_driving_batch",
    "step_observable",
]
