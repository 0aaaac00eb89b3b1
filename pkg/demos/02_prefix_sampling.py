"""
Prefix hints from an expert solution
====================================

When a problem is failed by every rollout, a leading slice of its expert
solution is handed to the model. The slice length is a random fraction of
the solution, pulled back to the nearest line break.
"""

import numpy as np
from lppo import build_prefix, draw_ratio, tokenize

solution = (
    "Let x be the unknown.\n"
    "Then 3x + 2 = 11.\n"
    "So 3x = 9.\n"
    "Hence x = 3.\n"
)
seq = tokenize(solution)
print(len(seq), "tokens, line breaks after tokens", sorted(seq.newline_marks))

rng = np.random.default_rng(7)
for _ in range(5):
    lam = draw_ratio(rng)
    spec = build_prefix(seq, lam)
    print(f"lambda={lam:.3f} raw={spec.raw_len:2d} clipped={spec.clipped_len:2d} | {spec.text!r}")

# strict clipping never hands over the whole solution
print(repr(build_prefix(seq, 1.0, clip="strictly_before").text))
