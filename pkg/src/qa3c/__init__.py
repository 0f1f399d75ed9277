"""Quantum and classical A3C on a statevector simulator."""

from .config import RunConfig, dump_config, parse_config
from .envs import ENV_NAMES, make_env
from .estimator import QA3C
from .exceptions import (ConfigurationError, NumericError, QA3CError, StorageError,
                         ToleranceError, UsageError)
from .gradcheck import run_gradcheck
from .models import build_actor_critic, count_params, load_checkpoint, save_checkpoint
from .runner import run_eval, run_train
from .trainer import TrainConfig, compute_returns, train

__all__ = [
    "ENV_NAMES", "QA3C", "RunConfig", "TrainConfig", "build_actor_critic", "compute_returns",
    "count_params", "dump_config", "load_checkpoint", "make_env", "parse_config", "run_eval",
    "run_gradcheck", "run_train", "save_checkpoint", "train",
    "QA3CError", "ConfigurationError", "StorageError", "NumericError", "ToleranceError", "UsageError",
]
__version__ = "0.1.0"
