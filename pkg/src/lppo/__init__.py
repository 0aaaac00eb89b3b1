"""Learning-progress weighting and prefix-guided sampling for group-relative policy optimisation."""

from .config import RunConfig, load_config
from .curation import BatchPlan, CurationScheduler, Disposition, TrainingExhausted, classify
from .dataset import DatasetConfig, Pool, Problem, generate_synthetic, load_dataset, save_dataset
from .grpo import (
    AdvantageSet,
    PolicyTable,
    RolloutGroup,
    apply_lp_weight,
    group_advantage,
    kl_to_reference,
    surrogate_objective,
    update_policy,
)
from .prefix import PrefixSpec, TokenSeq, augment, build_prefix, draw_ratio, tokenize
from .stats import SampleStats, StatsTracker, WeightingConfig, lp_weight
from .train import ablate, cmd_train, run_training

__version__ = "0.1.0"
