"""Group-relative advantages and the clipped surrogate update for a tabular softmax policy.

The objective for one group of ``G`` rollouts is

    J = 1/G * sum_k min(rho_k * A'_k, clip(rho_k, 1 - eps, 1 + eps) * A'_k)

with ``rho_k = exp(logpi(o_k) - logpi_old(o_k))`` and ``A'_k`` the
weighted advantage. There is no KL term; the divergence to the initial policy
is only reported.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

STD_EPS = 1e-8
SHARED_KEY = "__shared__"


class AdvantageMode(str, enum.Enum):
    STD_NORMALIZED = "std"
    MEAN_CENTERED = "mean"


def group_advantage(rewards, mode: AdvantageMode | str = AdvantageMode.STD_NORMALIZED) -> np.ndarray:
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ValueError(f"group advantage needs at least 2 rewards, got {r.size}")
    mode = AdvantageMode(mode)
    centered = r - r.mean()
    if np.all(r == r[0]):
        return np.zeros_like(r)
    if mode is AdvantageMode.MEAN_CENTERED:
        return centered
    return centered / (r.std() + STD_EPS)


@dataclass(frozen=True)
class AdvantageSet:
    raw: np.ndarray
    weighted: np.ndarray
    weight_applied: float


def apply_lp_weight(raw, w: float) -> AdvantageSet:
    if not w > 0.0:
        raise ValueError(f"advantage weight must be positive, got {w}")
    raw = np.asarray(raw, dtype=np.float64)
    return AdvantageSet(raw, raw * w, float(w))


@dataclass
class RolloutGroup:
    """``G`` rollouts of one problem; ``actions`` covers only the generated steps."""

    problem_id: str
    prefix_len: int
    actions: np.ndarray  # (G, n_generated) int
    logp_old: np.ndarray  # (G,)
    rewards: np.ndarray  # (G,)

    @property
    def group_size(self) -> int:
        return len(self.rewards)

    @property
    def pass_rate(self) -> float:
        return float(np.mean(self.rewards))


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    zs = z - z.max(axis=-1, keepdims=True)
    return zs - np.log(np.exp(zs).sum(axis=-1, keepdims=True))


class PolicyTable:
    """Softmax policy with one logit row per (problem, step).

    With ``shared_steps`` every problem reads the same row for a given step,
    so what is learned on one problem carries over to the others.
    """

    def __init__(
        self,
        logits: dict[str, np.ndarray],
        learning_rate: float = 0.1,
        clip_eps: float = 0.2,
        reference: dict[str, np.ndarray] | None = None,
        shared_steps: bool = False,
    ):
        self.logits = {k: np.array(v, dtype=np.float64) for k, v in logits.items()}
        self.reference = None if reference is None else {k: np.array(v, dtype=np.float64) for k, v in reference.items()}
        self.learning_rate = float(learning_rate)
        self.clip_eps = float(clip_eps)
        self.shared_steps = shared_steps

    @classmethod
    def uniform(cls, problems, learning_rate=0.1, clip_eps=0.2, shared_steps=False, with_reference=True):
        """Zero logits for every chain problem; the reference is a frozen copy."""
        logits = {}
        if shared_steps:
            chains = [p.chain for p in problems]
            t_max = max(c.steps for c in chains)
            logits[SHARED_KEY] = np.zeros((t_max, chains[0].branching))
        else:
            for p in problems:
                c = p.chain
                logits[p.id] = np.zeros((c.steps, c.branching))
        ref = {k: v.copy() for k, v in logits.items()} if with_reference else None
        return cls(logits, learning_rate, clip_eps, ref, shared_steps)

    def key(self, pid: str) -> str:
        return SHARED_KEY if self.shared_steps else pid

    def table(self, pid: str) -> np.ndarray:
        return self.logits[self.key(pid)]

    def probs(self, pid: str) -> np.ndarray:
        return _softmax(self.table(pid))

    def log_prob(self, pid: str, start: int, actions: np.ndarray) -> np.ndarray:
        """Summed log-probability of each action row, for steps ``start..start+n-1``."""
        actions = np.asarray(actions, dtype=np.int64)
        n = actions.shape[-1]
        if n == 0:
            return np.zeros(actions.shape[0])
        lp = _log_softmax(self.table(pid)[start:start + n])
        return lp[np.arange(n), actions].sum(axis=-1)

    def copy(self) -> "PolicyTable":
        return PolicyTable(self.logits, self.learning_rate, self.clip_eps, self.reference, self.shared_steps)

    def freeze_reference(self) -> None:
        self.reference = {k: v.copy() for k, v in self.logits.items()}


def surrogate_objective(
    group: RolloutGroup,
    adv: AdvantageSet,
    policy: PolicyTable,
    entropy_coef: float = 0.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Clipped surrogate for one group and its exact gradient w.r.t. the logits.

    Returns ``(objective, {table_key: gradient array})``. With a non-zero
    ``entropy_coef`` the summed entropy of the generated steps' action
    distributions is added, scaled by the coefficient.
    """
    start = group.prefix_len
    acts = np.asarray(group.actions, dtype=np.int64)
    g, n = acts.shape
    key = policy.key(group.problem_id)
    table = policy.logits[key]
    grad = np.zeros_like(table)
    if n == 0:
        # fully hinted: nothing generated, ratio is identically 1
        return float(np.mean(adv.weighted)), {key: grad}

    logp_old = np.asarray(group.logp_old, dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(logp_old))
    if bad.size:
        raise ValueError(f"non-finite old log-probability at rollout {int(bad[0])}")

    z = table[start:start + n]
    lsm = _log_softmax(z)
    p = np.exp(lsm)
    logp = lsm[np.arange(n), acts].sum(axis=-1)
    ratio = np.exp(logp - logp_old)
    a = adv.weighted
    eps = policy.clip_eps
    unclipped = ratio * a
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * a
    obj = float(np.mean(np.minimum(unclipped, clipped)))
    # gradient flows only where the unclipped branch is the minimum
    live = unclipped <= clipped
    coef = np.where(live, ratio * a, 0.0) / g  # d obj / d logpi_k

    # d logpi_k / d z[t] = onehot(a_kt) - p[t]
    rows = np.zeros((n, table.shape[1]))
    for t in range(n):
        rows[t] = np.bincount(acts[:, t], weights=coef, minlength=table.shape[1])
    rows -= coef.sum() * p

    if entropy_coef:
        h = -(p * lsm).sum(axis=-1)
        obj += entropy_coef * float(h.sum())
        rows += entropy_coef * (-p * (lsm + h[:, None]))

    grad[start:start + n] = rows
    return obj, {key: grad}


def batch_gradient(
    batch: Sequence[tuple[RolloutGroup, AdvantageSet]],
    policy: PolicyTable,
    entropy_coef: float = 0.0,
) -> tuple[float, dict[str, np.ndarray], dict]:
    """Mean objective and gradient over groups, reduced in (problem id) order."""
    total = 0.0
    grads: dict[str, np.ndarray] = {}
    ratios, clip_active = [], []
    for group, adv in sorted(batch, key=lambda ga: ga[0].problem_id):
        obj, g = surrogate_objective(group, adv, policy, entropy_coef)
        total += obj
        for k, v in g.items():
            if k in grads:
                grads[k] += v
            else:
                grads[k] = v.copy()
        if group.actions.shape[1]:
            r = np.exp(policy.log_prob(group.problem_id, group.prefix_len, group.actions) - group.logp_old)
        else:
            r = np.ones(group.group_size)
        ratios.append(r)
        eps = policy.clip_eps
        a = adv.weighted
        clip_active.append(np.where(a >= 0, r > 1 + eps, r < 1 - eps))
    m = len(batch)
    for v in grads.values():
        v /= m
    r_all = np.concatenate(ratios)
    stats = {
        "mean_abs_ratio_dev": float(np.mean(np.abs(r_all - 1.0))),
        "clip_fraction": float(np.mean(np.concatenate(clip_active))),
    }
    return total / m, grads, stats


def update_policy(
    policy: PolicyTable,
    batch: Iterable[tuple[RolloutGroup, AdvantageSet]],
    mini_batch: int | None = None,
    entropy_coef: float = 0.0,
) -> tuple[PolicyTable, list[dict]]:
    """Gradient ascent on the batch objective, in place.

    ``mini_batch`` splits the (id-sorted) batch into sequential chunks; every
    chunk is scored against the same old log-probabilities recorded at
    rollout time. Returns the policy and one audit dict per chunk.
    """
    batch = sorted(batch, key=lambda ga: ga[0].problem_id)
    if not batch:
        log.warning("update_policy called with an empty batch; policy unchanged")
        return policy, []
    size = mini_batch or len(batch)
    audits = []
    for i in range(0, len(batch), size):
        chunk = batch[i:i + size]
        obj, grads, stats = batch_gradient(chunk, policy, entropy_coef)
        for k, g in grads.items():
            policy.logits[k] += policy.learning_rate * g
        audits.append({"objective": obj, "n_groups": len(chunk), **stats})
    return policy, audits


def kl_to_reference(policy: PolicyTable) -> float:
    """Mean over states of KL(pi || pi_ref), summed exactly over actions."""
    if policy.reference is None:
        raise ValueError("policy has no reference snapshot")
    total, count = 0.0, 0
    for k in sorted(policy.logits):
        lp = _log_softmax(policy.logits[k])
        lq = _log_softmax(policy.reference[k])
        total += float((np.exp(lp) * (lp - lq)).sum())
        count += lp.shape[0]
    return total / count if count else 0.0
