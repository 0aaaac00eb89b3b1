"""Per-sample EMA pass rates, learning progress and learning-progress weights.

Each sample keeps an exponential moving average of its observed pass rate.
The progress of a sample is the first difference of that average between
two consecutive observations, and its weight is ``sigmoid(kappa * progress) + bias``.
"""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


class InitMode(str, enum.Enum):
    FIRST_OBSERVATION = "first_observation"
    ZERO = "zero"


def sigmoid(x):
    """Logistic function, overflow-safe for scalars and arrays; sigmoid(0) == 0.5 exactly."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def lp_weight(progress, kappa: float = 8.0, bias: float = 0.5):
    """Vectorised weight law. Accepts scalars or arrays for every argument."""
    return sigmoid(np.multiply(kappa, progress)) + bias


@dataclass(frozen=True)
class WeightingConfig:
    alpha: float = 0.5
    kappa: float = 8.0
    bias: float = 0.5
    init_mode: InitMode = InitMode.FIRST_OBSERVATION

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not self.bias >= 0.0:
            raise ValueError(f"bias must be non-negative, got {self.bias}")
        object.__setattr__(self, "init_mode", InitMode(self.init_mode))


@dataclass
class SampleStats:
    raw_pass_rate: float
    ema: float
    ema_prev: float | None = None
    progress: float | None = None
    weight: float = 1.0
    epoch_last_seen: int = 0
    excluded: bool = False
    n_obs: int = 0


class StatsTracker:
    """Single-writer store of :class:`SampleStats` keyed by problem id."""

    def __init__(self, config: WeightingConfig | None = None):
        self.config = config or WeightingConfig()
        self._stats: dict[str, SampleStats] = {}

    def __contains__(self, pid: str) -> bool:
        return pid in self._stats

    def __len__(self) -> int:
        return len(self._stats)

    def __getitem__(self, pid: str) -> SampleStats:
        try:
            return self._stats[pid]
        except KeyError:
            raise KeyError(f"unknown sample id {pid!r}") from None

    def ids(self):
        return sorted(self._stats)

    def update_pass_rate(self, pid: str, raw: float, epoch: int) -> SampleStats:
        """Ingest one observed pass rate; unseen ids are registered here."""
        raw = float(raw)
        if not 0.0 <= raw <= 1.0:
            raise ValueError(f"pass rate for {pid!r} must lie in [0, 1], got {raw}")
        cfg = self.config
        st = self._stats.get(pid)
        if st is None:
            if cfg.init_mode is InitMode.FIRST_OBSERVATION:
                st = SampleStats(raw_pass_rate=raw, ema=raw)
            else:
                ema = cfg.alpha * raw
                st = SampleStats(raw_pass_rate=raw, ema=ema, ema_prev=0.0)
            self._stats[pid] = st
        else:
            if epoch < st.epoch_last_seen:
                raise ValueError(
                    f"epoch {epoch} for {pid!r} precedes last seen epoch {st.epoch_last_seen}"
                )
            st.ema_prev = st.ema
            st.ema = cfg.alpha * raw + (1.0 - cfg.alpha) * st.ema_prev
            st.raw_pass_rate = raw
        if st.ema_prev is not None:
            st.progress = min(1.0, max(-1.0, st.ema - st.ema_prev))
        st.epoch_last_seen = epoch
        st.n_obs += 1
        st.weight = self._weight_of(st)
        return st

    def _weight_of(self, st: SampleStats) -> float:
        delta = 0.0 if st.progress is None else st.progress
        return float(lp_weight(delta, self.config.kappa, self.config.bias))

    def weight(self, pid: str) -> float:
        return self._weight_of(self[pid])

    def mark_excluded(self, pid: str, excluded: bool = True) -> None:
        self[pid].excluded = excluded

    def snapshot(self, epoch: int | None = None) -> dict[str, SampleStats]:
        """Deep copy of the per-sample state (``epoch`` is informational)."""
        return copy.deepcopy(self._stats)

    def restore(self, snap: dict[str, SampleStats]) -> None:
        self._stats = copy.deepcopy(snap)

    def save(self, path: str | Path) -> None:
        """Write one JSON record per sample, sorted by id."""
        with open(path, "w", encoding="utf-8") as fh:
            for pid in self.ids():
                st = self._stats[pid]
                rec = {
                    "id": pid,
                    "ema": st.ema,
                    "ema_prev": st.ema_prev,
                    "epoch": st.epoch_last_seen,
                    "excluded": st.excluded,
                    "raw_pass_rate": st.raw_pass_rate,
                    "n_obs": st.n_obs,
                }
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path: str | Path, config: WeightingConfig | None = None) -> "StatsTracker":
        tracker = cls(config)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip() or line.startswith("#"):
                    continue
                rec = json.loads(line)
                ema, prev = float(rec["ema"]), rec["ema_prev"]
                st = SampleStats(
                    raw_pass_rate=float(rec.get("raw_pass_rate", ema)),
                    ema=ema,
                    ema_prev=None if prev is None else float(prev),
                    epoch_last_seen=int(rec["epoch"]),
                    excluded=bool(rec["excluded"]),
                    n_obs=int(rec.get("n_obs", 1)),
                )
                if st.ema_prev is not None:
                    st.progress = min(1.0, max(-1.0, st.ema - st.ema_prev))
                st.weight = tracker._weight_of(st)
                tracker._stats[str(rec["id"])] = st
        return tracker

    def as_dicts(self) -> list[dict]:
        return [dict(id=pid, **asdict(self._stats[pid])) for pid in self.ids()]
