"""Predator-prey density-dependent branching processes: simulation and Monte Carlo."""

from .model import (
    CompetitionFamily,
    CompetitionFunction,
    ModelConfig,
    MomentPair,
    OffspringLaw,
    ParameterError,
    SurvivalFamily,
    SurvivalFunction,
    build_g1,
    build_g2,
    build_table,
    check_tail_decay,
    conditional_moments,
    eval_competition,
    eval_survival,
    validate_config,
)
from .config import ConfigError, load_config
from .sampling import EXPLODED, SeedStream, derive_stream, sample_binomial, sample_offspring_sum
from .simulator import Category, Fate, FateKind, PopulationState, RecordMode, Trajectory, simulate, step, step_carrying
from .montecarlo import FateCurve, estimate_fate_curve, growth_stats, moment_check, wilson_interval

__version__ = "0.1.0"
