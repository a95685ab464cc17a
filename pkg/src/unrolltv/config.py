"""Experiment configuration: one human-editable YAML file, fully defaulted.

Every hyperparameter of the signal experiment and the 2D demo lives
here so that sweeps are config edits, not code edits. Missing keys fall
back to the committed defaults; unknown keys and out-of-range values
are rejected with the offending field named. Parsing and serialization
round-trip exactly.

The per-regularizer sections carry independently tuned weights. The
learning rate, step count, seeds and model width are shared across
regularizers, which keeps runs comparable (and makes the lam = 0
degenerate runs coincide bitwise).
"""

import dataclasses
from dataclasses import dataclass

import numpy as np
import yaml

from .experiments import PcSignalSpec
from .regularizers import PENALTY_NAMES, RegularizerConfig, make_penalty

__all__ = [
    "ModelConfig",
    "TrainingConfig",
    "TvParams",
    "HuberParams",
    "CharbonnierParams",
    "UnrolledParams",
    "Demo2dConfig",
    "ExperimentConfig",
    "default_config",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "save_config",
]


@dataclass(frozen=True)
class ModelConfig:
    hidden_width: int = 64

    def __post_init__(self):
        if int(self.hidden_width) != self.hidden_width or self.hidden_width < 1:
            raise ValueError(f"hidden_width must be a positive integer, got {self.hidden_width}")


@dataclass(frozen=True)
class TrainingConfig:
    lr: float = 0.2
    steps: int = 5000
    seeds: tuple = tuple(range(10))
    probe_xs: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if not (np.isfinite(self.lr) and self.lr > 0):
            raise ValueError(f"lr must be finite and > 0, got {self.lr}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if len(self.seeds) == 0:
            raise ValueError("seeds must be non-empty")
        if any(int(s) != s for s in self.seeds):
            raise ValueError(f"seeds must be integers, got {self.seeds}")
        if any(not np.isfinite(p) for p in self.probe_xs):
            raise ValueError(f"probe_xs must be finite, got {self.probe_xs}")


@dataclass(frozen=True)
class TvParams:
    lam: float = 0.1

    def __post_init__(self):
        RegularizerConfig(lam=self.lam)


@dataclass(frozen=True)
class HuberParams:
    lam: float = 1.0
    k: float = 0.02

    def __post_init__(self):
        RegularizerConfig(lam=self.lam, huber_k=self.k)


@dataclass(frozen=True)
class CharbonnierParams:
    lam: float = 0.02
    eps: float = 0.002

    def __post_init__(self):
        RegularizerConfig(lam=self.lam, charbonnier_eps=self.eps)


@dataclass(frozen=True)
class UnrolledParams:
    lam: float = 0.001
    rho: float = 0.1
    eta: float = 0.5
    steps: int = 2
    warm_start: bool = False

    def __post_init__(self):
        RegularizerConfig(lam=self.lam, rho=self.rho, eta=self.eta, steps=self.steps)


@dataclass(frozen=True)
class Demo2dConfig:
    alpha: float = 8.0
    lam: float = 0.05
    rho: float = 1.0
    eta: float = 0.5
    unroll_steps: int = 2
    lr: float = 0.2
    opt_steps: int = 300
    shape: tuple = (32, 32)
    noise: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        RegularizerConfig(lam=self.lam, rho=self.rho, eta=self.eta, steps=self.unroll_steps)
        if not (np.isfinite(self.lr) and self.lr > 0):
            raise ValueError(f"lr must be finite and > 0, got {self.lr}")
        if int(self.opt_steps) != self.opt_steps or self.opt_steps < 1:
            raise ValueError(f"opt_steps must be a positive integer, got {self.opt_steps}")
        if len(self.shape) != 2 or any(int(s) != s or s < 2 for s in self.shape):
            raise ValueError(f"shape must be two integers >= 2, got {self.shape}")
        if not (np.isfinite(self.noise) and self.noise >= 0):
            raise ValueError(f"noise must be finite and >= 0, got {self.noise}")


@dataclass(frozen=True)
class ExperimentConfig:
    regularizer: str = "unrolled"
    signal: PcSignalSpec = PcSignalSpec()
    model: ModelConfig = ModelConfig()
    training: TrainingConfig = TrainingConfig()
    tv: TvParams = TvParams()
    huber: HuberParams = HuberParams()
    charbonnier: CharbonnierParams = CharbonnierParams()
    unrolled: UnrolledParams = UnrolledParams()
    demo2d: Demo2dConfig = Demo2dConfig()

    def __post_init__(self):
        if self.regularizer not in PENALTY_NAMES:
            raise ValueError(
                f"regularizer must be one of {PENALTY_NAMES}, got {self.regularizer!r}"
            )

    def widths(self):
        h = self.model.hidden_width
        return (1, h, h, h, 1)

    def penalty(self, name=None):
        """Instantiate the configured penalty object for a regularizer."""
        name = self.regularizer if name is None else name
        if name == "tv":
            return make_penalty("tv", lam=self.tv.lam)
        if name == "huber":
            return make_penalty("huber", lam=self.huber.lam, k=self.huber.k)
        if name == "charbonnier":
            return make_penalty("charbonnier", lam=self.charbonnier.lam, eps=self.charbonnier.eps)
        if name == "unrolled":
            u = self.unrolled
            return make_penalty(
                "unrolled", lam=u.lam, rho=u.rho, eta=u.eta, steps=u.steps, warm_start=u.warm_start
            )
        raise ValueError(f"regularizer must be one of {PENALTY_NAMES}, got {name!r}")


_SECTIONS = {
    "signal": PcSignalSpec,
    "model": ModelConfig,
    "training": TrainingConfig,
    "tv": TvParams,
    "huber": HuberParams,
    "charbonnier": CharbonnierParams,
    "unrolled": UnrolledParams,
    "demo2d": Demo2dConfig,
}

_TUPLE_FIELDS = {"domain", "value_range", "seeds", "probe_xs", "shape"}


def default_config():
    return ExperimentConfig()


def _build_section(cls, data, path):
    if not isinstance(data, dict):
        raise ValueError(f"{path} must be a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ValueError(f"{path}.{key} is not a recognized option")
        if key in _TUPLE_FIELDS:
            if not isinstance(value, (list, tuple)):
                raise ValueError(f"{path}.{key} must be a list")
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None


def config_from_dict(data):
    """Build a validated ExperimentConfig from a plain nested dict."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValueError(f"config must be a mapping, got {type(data).__name__}")
    kwargs = {}
    for key, value in data.items():
        if key == "regularizer":
            kwargs[key] = value
        elif key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key)
        else:
            raise ValueError(f"{key} is not a recognized config section")
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValueError(str(exc)) from None


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def config_to_dict(cfg):
    """Plain nested dict (lists, no tuples) suitable for YAML."""
    return _plain(cfg)


def load_config(path=None):
    """Load a YAML config file; None or an empty file means defaults."""
    if path is None:
        return default_config()
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    return config_from_dict(data)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)
