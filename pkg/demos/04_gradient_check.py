"""
Checking the surrogate gradient
===============================

The clipped surrogate has a closed-form gradient with respect to the
policy logits. Here it is compared against central differences on a tiny
chain problem, after nudging the policy so some ratios leave the clip band.
"""

import numpy as np
from lppo import PolicyTable, Problem, apply_lp_weight, group_advantage, surrogate_objective
from lppo.dataset import ChainProblemSpec, Pool, render_solution
from lppo.env import rollout_group

path = (2, 0, 1)
problem = Problem("demo", ChainProblemSpec(3, 3, path).to_dict(), "2 0 1",
                  render_solution(path), Pool.PREFIX_ELIGIBLE)
policy = PolicyTable.uniform([problem], learning_rate=1.0)
rng = np.random.default_rng(11)

group = rollout_group(policy, problem, 12, 0, rng)
while group.rewards.min() == group.rewards.max():
    group = rollout_group(policy, problem, 12, 0, rng)
adv = apply_lp_weight(group_advantage(group.rewards), 1.2)

# move away from the sampling policy
policy.logits["demo"] += rng.normal(scale=0.4, size=policy.logits["demo"].shape)
obj, grads = surrogate_objective(group, adv, policy, entropy_coef=-0.001)

h = 1e-5
fd = np.zeros_like(policy.logits["demo"])
for idx in np.ndindex(fd.shape):
    saved = policy.logits["demo"][idx]
    policy.logits["demo"][idx] = saved + h
    up, _ = surrogate_objective(group, adv, policy, entropy_coef=-0.001)
    policy.logits["demo"][idx] = saved - h
    down, _ = surrogate_objective(group, adv, policy, entropy_coef=-0.001)
    policy.logits["demo"][idx] = saved
    fd[idx] = (up - down) / (2 * h)

print("objective", obj)
print("analytic\n", np.round(grads["demo"], 6))
print("max abs difference", np.abs(grads["demo"] - fd).max())
