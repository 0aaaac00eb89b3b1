"""Run configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment. Values are parsed as JSON when
possible (numbers, ``true``/``false``/``null``, lists) and kept as bare
strings otherwise::

    mode = lppo
    group_size = 16
    steps_range = [4, 8]
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .dataset import DatasetConfig
from .grpo import AdvantageMode
from .stats import InitMode, WeightingConfig

MODES = ("lppo", "lp_only", "pg_only", "grpo_baseline")
_OPTIONAL = {"dataset_seed", "max_requeue", "readmit_every", "mini_batch", "epochs"}
_NUMERIC = _OPTIONAL | {
    "n_problems", "branching", "prefix_eligible_fraction", "alpha", "kappa", "bias",
    "beta_min", "beta_max", "epsilon_c", "group_size", "batch_size", "steps", "clip_eps",
    "entropy_coef", "learning_rate", "seed", "tau", "threshold",
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, msg: str):
        super().__init__(f"{field_name}: {msg}")
        self.field = field_name


@dataclass
class RunConfig:
    # dataset: a JSONL path, or a synthetic suite when unset
    dataset_path: str | None = None
    n_problems: int = 64
    steps_range: list = field(default_factory=lambda: [4, 8])
    branching: int = 4
    prefix_eligible_fraction: float = 1.0
    dataset_seed: int | None = None
    # learning-progress weighting
    alpha: float = 0.5
    kappa: float = 8.0
    bias: float = 0.5
    init_mode: str = "first_observation"
    # prefix sampling and curation
    beta_min: float = 0.3
    beta_max: float = 0.8
    clip_rule: str = "at_or_before"
    epsilon_c: float = 0.0
    max_requeue: int | None = None
    readmit_every: int | None = None
    # optimisation
    group_size: int = 32
    batch_size: int = 128
    mini_batch: int | None = 64
    steps: int = 300
    epochs: int | None = None
    clip_eps: float = 0.2
    advantage_mode: str = "std"
    entropy_coef: float = -0.001
    learning_rate: float = 0.1
    shared_steps: bool = False
    seed: int = 0
    mode: str = "lppo"
    # reporting
    tau: float = 0.01
    threshold: float = 0.8

    def __post_init__(self):
        self.validate()

    @property
    def lp_enabled(self) -> bool:
        return self.mode in ("lppo", "lp_only")

    @property
    def pg_enabled(self) -> bool:
        return self.mode in ("lppo", "pg_only")

    def weighting(self) -> WeightingConfig:
        return WeightingConfig(self.alpha, self.kappa, self.bias, InitMode(self.init_mode))

    def dataset_config(self) -> DatasetConfig:
        seed = self.seed if self.dataset_seed is None else self.dataset_seed
        return DatasetConfig(self.n_problems, tuple(self.steps_range), self.branching,
                             self.prefix_eligible_fraction, seed)

    def validate(self) -> None:
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(name, msg)

        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in _NUMERIC:
                ok = isinstance(v, (int, float)) and not isinstance(v, bool)
                need(ok or (v is None and f.name in _OPTIONAL), f.name, f"must be a number, got {v!r}")
        need(self.mode in MODES, "mode", f"must be one of {MODES}, got {self.mode!r}")
        need(0.0 < self.alpha <= 1.0, "alpha", "must lie in (0, 1]")
        need(self.kappa > 0, "kappa", "must be positive")
        need(self.bias >= 0, "bias", "must be non-negative")
        need(self.init_mode in {m.value for m in InitMode}, "init_mode", f"unknown value {self.init_mode!r}")
        need(0.0 <= self.beta_min <= self.beta_max <= 1.0, "beta_min",
             "need 0 <= beta_min <= beta_max <= 1")
        need(self.clip_rule in ("at_or_before", "strictly_before"), "clip_rule", f"unknown value {self.clip_rule!r}")
        need(0.0 <= self.epsilon_c < 1.0, "epsilon_c", "must lie in [0, 1)")
        need(self.group_size >= 2, "group_size", "must be >= 2")
        need(self.batch_size >= 1, "batch_size", "must be >= 1")
        need(self.mini_batch is None or self.mini_batch >= 1, "mini_batch", "must be >= 1 or null")
        need(self.steps >= 0, "steps", "must be >= 0")
        need(self.epochs is None or self.epochs >= 1, "epochs", "must be >= 1 or null")
        need(0.0 < self.clip_eps < 1.0, "clip_eps", "must lie in (0, 1)")
        need(self.advantage_mode in {m.value for m in AdvantageMode}, "advantage_mode",
             f"unknown value {self.advantage_mode!r}")
        need(self.learning_rate > 0, "learning_rate", "must be positive")
        need(isinstance(self.steps_range, (list, tuple)) and len(self.steps_range) == 2
             and 1 <= self.steps_range[0] <= self.steps_range[1], "steps_range", "need [min, max] with 1 <= min <= max")
        need(self.branching >= 2, "branching", "must be >= 2")
        need(0.0 <= self.prefix_eligible_fraction <= 1.0, "prefix_eligible_fraction", "must lie in [0, 1]")
        need(self.max_requeue is None or self.max_requeue >= 0, "max_requeue", "must be >= 0 or null")
        need(self.readmit_every is None or self.readmit_every >= 1, "readmit_every", "must be >= 1 or null")
        need(self.tau >= 0, "tau", "must be non-negative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        for k in d:
            if k not in names:
                raise ConfigError(k, "unknown config key")
        return cls(**d)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _parse_value(value)
    return out


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_dict(parse_config_text(Path(path).read_text(encoding="utf-8")))


def dump_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in cfg.to_dict().items())
