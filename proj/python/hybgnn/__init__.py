"""HybGNN EEG depression detection: Python front end over the C++ core."""

import json

from . import _core
from ._core import Model as _Model, TrainingError, mean_row_entropy, preset_names, segment

__all__ = [
    "Model",
    "TrainingError",
    "run",
    "resolve_config",
    "metrics_from_counts",
    "mean_row_entropy",
    "preset_names",
    "segment",
    "synth_recordings",
]

COMMANDS = ("train", "cv", "ablation", "sweep", "eval", "synth")


def run(command, config=None):
    """Run a tool command with a config dict (same schema as the config file)."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command: {command}")
    return json.loads(_core.run_command(command, json.dumps(config or {})))


def resolve_config(config=None):
    """Effective synthetic-data config after presets and overrides."""
    return json.loads(_core.resolve_config(json.dumps(config or {})))


def metrics_from_counts(tp, fp, fn, tn):
    return json.loads(_core.metrics_from_counts(tp, fp, fn, tn))


def synth_recordings(subjects_per_class=20, seconds=60.0, channels=19, sampling_rate=256.0, seed=0):
    return _core.synth_recordings(subjects_per_class, seconds, channels, sampling_rate, seed)


class Model:
    """Model with a dict config; forward returns numpy arrays."""

    def __init__(self, config=None, seed=0, _inner=None):
        self._m = _inner if _inner is not None else _Model(json.dumps(config or {}), seed)

    @classmethod
    def load(cls, path):
        return cls(_inner=_Model.load(str(path)))

    def save(self, path):
        self._m.save(str(path))

    @property
    def config(self):
        return json.loads(self._m.config_json)

    def parameters(self):
        return self._m.parameters()

    def forward(self, segment):
        return self._m.forward(segment)

    def predict(self, segment):
        return self._m.predict(segment)
