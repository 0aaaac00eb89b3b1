"""
Curating the active set
=======================

Problems that are always solved are retired for good. Problems that are
never solved are queued for a hinted retry, and the queue is drained
before fresh problems are drawn.
"""

import numpy as np
from lppo import CurationScheduler, Pool, build_prefix, tokenize

ids = [f"q{i}" for i in range(8)]
sched = CurationScheduler(ids)
rng = np.random.default_rng(0)
hint = build_prefix(tokenize("1\n2\n3\n"), 0.5)

observed = {"q0": 1.0, "q1": 0.0, "q2": 0.25, "q3": 0.0}
for pid, rate in observed.items():
    pool = Pool.PREFIX_ELIGIBLE if pid != "q3" else Pool.STANDARD
    disp = sched.classify(pid, rate, pool)
    print(pid, rate, pool.value, "->", disp.value)
    if disp.value == "retire":
        sched.retire(pid)
    elif disp.value == "queue_prefix":
        sched.queue_prefix(pid, hint)

step = 0
while not sched.epoch_done():
    step += 1
    plan = sched.build_batch(3, rng, step)
    print("batch", plan.step, "hinted", [p for p, _ in plan.prefixed_entries],
          "fresh", plan.standard_entries)

state = sched.advance_epoch()
print("epoch", state.epoch, "active", sorted(state.active_ids), "retired", sorted(state.retired_ids))
