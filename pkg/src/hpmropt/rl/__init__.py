"""PPO-based design optimizer over the normalized design cube."""

from .ppo import (
    PolicyState,
    PPOHyper,
    Rollout,
    clipped_objective,
    entropy,
    gae,
    log_prob,
    ppo_update,
    sample_actions,
)
from .reward import Constraint, ConstraintSpec, CostFunction, evaluate_rewards, is_feasible, penalty, reward
from .train import TrainConfig, TrainingResult, random_search_baseline, train

__all__ = [
    "PolicyState", "PPOHyper", "Rollout", "clipped_objective", "entropy", "gae", "log_prob", "ppo_update",
    "sample_actions", "Constraint", "ConstraintSpec", "CostFunction", "evaluate_rewards", "is_feasible",
    "penalty", "reward", "TrainConfig", "TrainingResult", "random_search_baseline", "train",
]
