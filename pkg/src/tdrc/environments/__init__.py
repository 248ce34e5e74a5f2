import numpy as np

from .chains import (BAIRD_INIT, RANDOM_WALK_FEATURES, make_baird, make_boyan,
                     make_random_walk)
from .mountain_car import mountain_car_reset, mountain_car_step
from .tiles import TileCoderConfig, tile_code, tile_indices

__all__ = ["BAIRD_INIT", "CONTROL_ENVS", "ENVIRONMENTS", "PREDICTION_ENVS", "RANDOM_WALK_FEATURES",
           "TileCoderConfig", "initial_weights", "make_baird", "make_boyan", "make_prediction",
           "make_random_walk", "mountain_car_reset", "mountain_car_step", "tile_code",
           "tile_indices"]

PREDICTION_ENVS = ("boyan", "baird", "randomwalk-tabular", "randomwalk-inverted",
                   "randomwalk-dependent")
CONTROL_ENVS = ("mountaincar",)
ENVIRONMENTS = PREDICTION_ENVS + CONTROL_ENVS


def make_prediction(name: str):
    """(MdpSpec, FeatureMap, behaviour, target) for a CLI environment name."""
    if name == "boyan":
        return make_boyan()
    if name == "baird":
        return make_baird()
    if name.startswith("randomwalk-"):
        return make_random_walk(name.split("-", 1)[1])
    raise ValueError(f"unknown prediction environment {name!r}; expected one of {PREDICTION_ENVS}")


def initial_weights(name: str, n_features: int):
    if name == "baird":
        return BAIRD_INIT.copy()
    return np.zeros(n_features)
