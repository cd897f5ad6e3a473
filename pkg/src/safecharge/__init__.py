"""Safe TD3 battery fast-charging with an adaptive GP safety layer."""

from .config import (AmbientSchedule, BatteryParams, CccvParams, ConfigError,
                     ExperimentConfig, fixed_condition_config, load_config,
                     save_config, varying_condition_config)
from .harness import (TrainResult, reward, train, train_adaptive, train_plain,
                      train_static)
from .protocols import evaluate, make_cccv_policy
from .rng import Rng
from .states import AgentState, BatteryState, Transition

__version__ = "0.1.0"

__all__ = [
    "AmbientSchedule", "AgentState", "BatteryParams", "BatteryState",
    "CccvParams", "ConfigError", "ExperimentConfig", "Rng", "TrainResult",
    "Transition", "evaluate", "fixed_condition_config", "load_config",
    "make_cccv_policy", "reward", "save_config", "train", "train_adaptive",
    "train_plain", "train_static", "varying_condition_config",
]
