"""Asynchronous visual odometry fusion: simulator, MDN front end, fusion transformer, EKF baseline."""

import json

from . import _core
from ._core import (
    ConfigError,
    TrainingError,
    WindowTooLongError,
    compose,
    discretise,
    mixture_moments,
    mixture_nll,
    relative_pose,
    rpe,
    run_ekf,
    simulate,
)

__version__ = _core.__version__


def default_config():
    return json.loads(_core.default_config())


def normalise_config(config):
    return json.loads(_core.normalise_config(json.dumps(config)))


def generate(config):
    """Writes the dataset described by `config`; returns (exit_code, log)."""
    return _core.generate(json.dumps(config))


def train(config, data_dir="", resume=False):
    return _core.train(json.dumps(config), str(data_dir), resume)


def evaluate(checkpoint, data_dir, out_dir, axis_errors=False):
    return _core.evaluate(str(checkpoint), str(data_dir), str(out_dir), axis_errors)


def ablate(config, table="all"):
    return _core.ablate(json.dumps(config), table)


def export_trajectory(checkpoint, episode_dir, out_file, method="aft"):
    return _core.export_trajectory(str(checkpoint), str(episode_dir), str(out_file), method)


__all__ = [
    "ConfigError",
    "TrainingError",
    "WindowTooLongError",
    "ablate",
    "compose",
    "default_config",
    "discretise",
    "evaluate",
    "export_trajectory",
    "generate",
    "mixture_moments",
    "mixture_nll",
    "normalise_config",
    "relative_pose",
    "rpe",
    "run_ekf",
    "simulate",
    "train",
]
