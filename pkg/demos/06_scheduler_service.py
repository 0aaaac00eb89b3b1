"""
Talking to the scheduler service
================================

An external trainer can keep its own policy and ask the scheduler for
weights, dispositions and hints, one JSON line at a time. This script
drives the service in-process; ``lppo serve`` exposes the same protocol
over stdin/stdout or TCP.
"""

import json
import tempfile

from lppo import DatasetConfig, generate_synthetic
from lppo.service import SchedulerService

problems = generate_synthetic(DatasetConfig(n_problems=4, prefix_eligible_fraction=0.5, seed=1))
service = SchedulerService(problems, snapshot_dir=tempfile.mkdtemp())
a, b = problems[0].id, problems[1].id

requests = [
    {"op": "report", "id": a, "pass_rate": 0.25, "epoch": 1},
    {"op": "report", "id": a, "pass_rate": 0.75, "epoch": 2},
    {"op": "report", "id": b, "pass_rate": 0.0, "epoch": 1},
    {"op": "prefix", "id": b},
    {"op": "prefix", "id": "nope"},
    {"op": "snapshot"},
]
for req in requests:
    line = json.dumps(req)
    print(">", line)
    print("<", service.handle_line(line), end="")
