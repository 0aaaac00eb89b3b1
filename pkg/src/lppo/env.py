"""Chain environment: T sequential choices among B actions, reward 1 only for the exact correct path."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .dataset import Problem
from .grpo import PolicyTable, RolloutGroup


@dataclass(frozen=True)
class ChainRollout:
    problem_id: str
    prefix_len: int
    actions: tuple[int, ...]
    logprob_old: float
    reward: int


def substream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for (seed, keys); string keys are hashed with crc32."""
    words = [int(seed) & 0xFFFFFFFF]
    for k in keys:
        words.append(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(words))


def _sample_actions(probs: np.ndarray, n_rollouts: int, rng: np.random.Generator) -> np.ndarray:
    # inverse-CDF sampling, one uniform per (rollout, step)
    n = probs.shape[0]
    if n == 0:
        return np.zeros((n_rollouts, 0), dtype=np.int64)
    cdf = np.cumsum(probs, axis=-1)
    u = rng.random((n_rollouts, n))
    acts = (u[:, :, None] >= cdf[None, :, :]).sum(axis=-1)
    return np.minimum(acts, probs.shape[1] - 1).astype(np.int64)


def verify_actions(actions, problem: Problem, prefix_len: int) -> int:
    chain = problem.chain
    actions = tuple(int(a) for a in actions)
    if prefix_len + len(actions) != chain.steps:
        raise ValueError(
            f"malformed rollout for {problem.id!r}: {prefix_len} hinted + "
            f"{len(actions)} generated != {chain.steps} steps"
        )
    return int(actions == chain.correct_path[prefix_len:])


def verify(rollout: ChainRollout, problem: Problem) -> int:
    """All-or-nothing reward: 1 iff hinted plus generated steps equal the correct path."""
    if rollout.problem_id != problem.id:
        raise ValueError(f"rollout for {rollout.problem_id!r} checked against {problem.id!r}")
    return verify_actions(rollout.actions, problem, rollout.prefix_len)


def rollout_group(
    policy: PolicyTable, problem: Problem, group_size: int, prefix_len: int, rng: np.random.Generator
) -> RolloutGroup:
    chain = problem.chain
    if not 0 <= prefix_len <= chain.steps:
        raise ValueError(f"prefix_len {prefix_len} outside [0, {chain.steps}] for {problem.id!r}")
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    probs = policy.probs(problem.id)[prefix_len:chain.steps]
    acts = _sample_actions(probs, group_size, rng)
    logp = policy.log_prob(problem.id, prefix_len, acts)
    target = np.asarray(chain.correct_path[prefix_len:], dtype=np.int64)
    rewards = np.all(acts == target[None, :], axis=1).astype(np.float64)
    return RolloutGroup(problem.id, prefix_len, acts, logp, rewards)


def rollout(policy: PolicyTable, problem: Problem, prefix_len: int, rng: np.random.Generator) -> ChainRollout:
    g = rollout_group(policy, problem, 1, prefix_len, rng)
    return ChainRollout(problem.id, prefix_len, tuple(int(a) for a in g.actions[0]),
                        float(g.logp_old[0]), int(g.rewards[0]))


def pass_rate(
    policy: PolicyTable, problem: Problem, group_size: int, prefix_len: int, rng: np.random.Generator
) -> tuple[float, RolloutGroup]:
    group = rollout_group(policy, problem, group_size, prefix_len, rng)
    return group.pass_rate, group


def exact_pass_rate(policy: PolicyTable, problem: Problem, prefix_len: int = 0) -> float:
    """Probability that one rollout solves ``problem``, computed in closed form."""
    chain = problem.chain
    p = policy.probs(problem.id)[prefix_len:chain.steps]
    idx = np.asarray(chain.correct_path[prefix_len:], dtype=np.int64)
    return float(np.prod(p[np.arange(len(idx)), idx]))
