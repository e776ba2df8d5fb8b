"""Noise schedule, DSM training and samplers."""

from .oracles import GaussianOracleFamily, RankOneOracleFamily
from .samplers import epsilon_to_score, sample_ancestral, sample_langevin, score_function
from .schedule import NoiseSchedule, default_sigma_range, make_schedule, mid_sigma
from .training import (
    AdamOptimizer,
    DsmLoss,
    SgdOptimizer,
    TrainConfig,
    TrainTrace,
    dsm_loss,
    make_optimizer,
    train,
)

__all__ = [
    "AdamOptimizer",
    "DsmLoss",
    "GaussianOracleFamily",
    "NoiseSchedule",
    "RankOneOracleFamily",
    "SgdOptimizer",
    "TrainConfig",
    "TrainTrace",
    "default_sigma_range",
    "dsm_loss",
    "epsilon_to_score",
    "make_optimizer",
    "make_schedule",
    "mid_sigma",
    "sample_ancestral",
    "sample_langevin",
    "score_function",
    "train",
]
