"""
Learning-progress weights
=========================

A sample's weight depends on how much its smoothed pass rate moved since
the last time it was seen. Rising pass rates get weights above 1, falling
ones get weights below 1, and a first sighting always gets exactly 1.
"""

import numpy as np
from lppo import StatsTracker, lp_weight

# the weight law on its own: sigmoid(8 * progress) + 0.5
progress = np.linspace(-1, 1, 9)
for d, w in zip(progress, lp_weight(progress)):
    print(f"progress {d:+.2f} -> weight {w:.4f}")

# three problems observed over four epochs
tracker = StatsTracker()
history = {
    "climbing": [0.1, 0.3, 0.6, 0.9],
    "flat": [0.5, 0.5, 0.5, 0.5],
    "slipping": [0.9, 0.6, 0.4, 0.2],
}
for epoch in range(1, 5):
    for pid, rates in history.items():
        tracker.update_pass_rate(pid, rates[epoch - 1], epoch)
    print(f"epoch {epoch}: " + "  ".join(
        f"{pid}={tracker.weight(pid):.3f}" for pid in history))
