"""Online curation: per-evaluation dispositions, the prefix queue and batch planning."""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dataset import Pool
from .prefix import PrefixSpec


class TrainingExhausted(RuntimeError):
    """No active problems and nothing queued."""


class Disposition(str, enum.Enum):
    USE_FOR_UPDATE = "use"
    SKIP_AND_RETIRE = "retire"
    SKIP_ONLY = "skip"
    QUEUE_PREFIX = "queue_prefix"


class SkipReason(str, enum.Enum):
    ALL_PASS = "all_pass"
    ALL_FAIL = "all_fail"
    EXCLUDED_EPOCH = "excluded_epoch"


def classify(raw_pass_rate: float, pool: Pool, epsilon_c: float = 0.0, prefix_enabled: bool = True) -> Disposition:
    if not 0.0 <= raw_pass_rate <= 1.0:
        raise ValueError(f"pass rate must lie in [0, 1], got {raw_pass_rate}")
    if raw_pass_rate == 1.0:
        return Disposition.SKIP_AND_RETIRE
    if prefix_enabled and pool is Pool.PREFIX_ELIGIBLE and raw_pass_rate <= epsilon_c:
        return Disposition.QUEUE_PREFIX
    if raw_pass_rate == 0.0:
        return Disposition.SKIP_ONLY
    return Disposition.USE_FOR_UPDATE


@dataclass
class BatchPlan:
    epoch: int
    step: int
    standard_entries: list[str] = field(default_factory=list)
    prefixed_entries: list[tuple[str, PrefixSpec]] = field(default_factory=list)
    skipped: list[tuple[str, SkipReason]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.standard_entries) + len(self.prefixed_entries)

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "step": self.step,
            "standard": list(self.standard_entries),
            "prefixed": [
                {"id": pid, "lambda": s.lam, "raw_len": s.raw_len, "prefix_len": s.clipped_len}
                for pid, s in self.prefixed_entries
            ],
            "skipped": [{"id": pid, "reason": r.value} for pid, r in self.skipped],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class CurationState:
    active_ids: set[str]
    retired_ids: set[str] = field(default_factory=set)
    prefix_queue: deque = field(default_factory=deque)  # of (id, PrefixSpec)
    epoch: int = 1


class CurationScheduler:
    """Owns the active/retired split, the prefix queue and the epoch's draw pool.

    Each epoch visits every active id once in random order; queued prefixed
    entries go first in every plan and overflow stays queued in FIFO order.
    Retirement is permanent unless ``readmit_every`` is set, in which case
    retired ids return to the active set every that many epochs.
    """

    def __init__(self, ids, epsilon_c: float = 0.0, prefix_enabled: bool = True,
                 max_requeue: int | None = None, readmit_every: int | None = None):
        self.state = CurationState(set(ids))
        self.n_total = len(self.state.active_ids)
        self.epsilon_c = epsilon_c
        self.prefix_enabled = prefix_enabled
        self.max_requeue = max_requeue
        self.readmit_every = readmit_every
        self.requeue_counts: dict[str, int] = {}
        self.retired_this_epoch: set[str] = set()
        self._epoch_pool: list[str] = sorted(self.state.active_ids)
        self._drawn: set[str] = set()

    @property
    def epoch(self) -> int:
        return self.state.epoch

    @property
    def active_ratio(self) -> float:
        return len(self.state.active_ids) / self.n_total if self.n_total else 0.0

    def epoch_done(self) -> bool:
        return not any(pid in self.state.active_ids for pid in self._remaining())

    def _remaining(self) -> list[str]:
        return [pid for pid in self._epoch_pool if pid not in self._drawn]

    def queued_ids(self) -> set[str]:
        return {pid for pid, _ in self.state.prefix_queue}

    def classify(self, pid: str, raw_pass_rate: float, pool: Pool) -> Disposition:
        return classify(raw_pass_rate, pool, self.epsilon_c, self.prefix_enabled)

    def retire(self, pid: str) -> None:
        if pid in self.state.active_ids:
            self.state.active_ids.discard(pid)
            self.state.retired_ids.add(pid)
            self.retired_this_epoch.add(pid)

    def queue_prefix(self, pid: str, spec: PrefixSpec, requeue: bool = False) -> bool:
        """Queue a hinted copy; returns False when the id is already queued or out of requeues."""
        if not self.prefix_enabled:
            raise RuntimeError("prefix queue is disabled in this mode")
        if pid in self.queued_ids():
            return False
        if requeue:
            n = self.requeue_counts.get(pid, 0)
            if self.max_requeue is not None and n >= self.max_requeue:
                return False
            self.requeue_counts[pid] = n + 1
        self.state.prefix_queue.append((pid, spec))
        return True

    def build_batch(self, batch_size: int, rng: np.random.Generator, step: int = 0) -> BatchPlan:
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        st = self.state
        if not st.active_ids and not st.prefix_queue:
            raise TrainingExhausted("all problems retired and prefix queue empty")
        plan = BatchPlan(st.epoch, step)
        while st.prefix_queue and len(plan) < batch_size:
            pid, spec = st.prefix_queue.popleft()
            if pid in st.retired_ids:
                plan.skipped.append((pid, SkipReason.EXCLUDED_EPOCH))
                continue
            plan.prefixed_entries.append((pid, spec))
        hinted = {pid for pid, _ in plan.prefixed_entries}
        room = batch_size - len(plan)
        if room > 0:
            candidates = [pid for pid in self._remaining() if pid in st.active_ids and pid not in hinted]
            if candidates:
                k = min(room, len(candidates))
                picks = rng.choice(len(candidates), size=k, replace=False)
                chosen = sorted(candidates[i] for i in picks)
                self._drawn.update(chosen)
                plan.standard_entries.extend(chosen)
            else:
                # only hinted ids left: their hinted evaluation stands in for this epoch's visit
                self._drawn.update(hinted)
        return plan

    def advance_epoch(self) -> CurationState:
        st = self.state
        st.active_ids -= st.retired_ids
        st.epoch += 1
        if self.readmit_every and (st.epoch - 1) % self.readmit_every == 0:
            st.active_ids |= st.retired_ids
            st.retired_ids.clear()
        self.retired_this_epoch = set()
        self._epoch_pool = sorted(st.active_ids)
        self._drawn = set()
        return st
