"""
Comparing training modes
========================

The same 64-problem chain suite is trained four ways: plain group-relative
updates, learning-progress weights only, prefix hints only, and both.
Five seeds take about half a minute.
"""

from pathlib import Path

from lppo import ablate, load_config

cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / "e2e.txt")
rows = ablate(cfg, ["grpo_baseline", "lp_only", "pg_only", "lppo"], seeds=range(5))
print(f"{'arm':<15}{'median steps to 0.8':>22}{'median final':>15}")
for r in rows:
    print(f"{r['arm']:<15}{r['median_steps_to_threshold']:>22}{r['median_final_pass_rate']:>15.3f}")
