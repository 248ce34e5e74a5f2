from .batch import BatchResult, RewardScaleResult, run_batch, run_reward_scale
from .config import ExperimentConfig
from .control import final_steps_to_goal, run_control
from .emit import read_results, write_results
from .online import prediction_problem, run_online

__all__ = ["BatchResult", "ExperimentConfig", "RewardScaleResult", "final_steps_to_goal",
           "prediction_problem", "read_results", "run_batch", "run_control", "run_experiment",
           "run_online", "run_reward_scale", "write_results"]


def run_experiment(config: ExperimentConfig, workers: int | None = None):
    """Dispatch on ``config.protocol``."""
    if config.protocol == "online":
        return run_online(config, workers)
    if config.protocol == "batch":
        return run_batch(config, workers)
    if config.protocol == "reward-scale":
        return run_reward_scale(config)
    return run_control(config)
