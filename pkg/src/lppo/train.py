"""Training loop on the chain environment, plus ablation over modes.

Every step: build a batch (queued hinted problems first), roll out each
entry, update pass-rate statistics, classify, queue hints for failed
prefix-eligible problems, weight the advantages and take one policy step.
"""

from __future__ import annotations

import json
import logging
import math
import shutil
import statistics
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import MODES, RunConfig, dump_config
from .curation import BatchPlan, CurationScheduler, Disposition, SkipReason, TrainingExhausted
from .dataset import Pool, Problem, generate_synthetic, load_dataset
from .env import exact_pass_rate, pass_rate, substream
from .grpo import PolicyTable, apply_lp_weight, group_advantage, kl_to_reference, update_policy
from .metrics import StepRecord, export, trend_counts, Trend
from .prefix import build_prefix, draw_ratio, tokenize
from .stats import StatsTracker

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    config: RunConfig
    records: list[StepRecord] = field(default_factory=list)
    weight_log: list[dict] = field(default_factory=list)
    plans: list[BatchPlan] = field(default_factory=list)
    optimizer_log: list[dict] = field(default_factory=list)
    tracker: StatsTracker | None = None
    policy: PolicyTable | None = None
    exhausted: bool = False

    def steps_to_threshold(self, threshold: float | None = None) -> int | None:
        return steps_to_threshold(self.records, self.config.threshold if threshold is None else threshold)

    @property
    def final_pass_rate(self) -> float:
        return self.records[-1].mean_pass_rate if self.records else float("nan")


def steps_to_threshold(records: Sequence[StepRecord], threshold: float) -> int | None:
    for r in records:
        if r.mean_pass_rate >= threshold:
            return r.step
    return None


def load_problems(cfg: RunConfig) -> list[Problem]:
    if cfg.dataset_path:
        return load_dataset(cfg.dataset_path)
    return generate_synthetic(cfg.dataset_config())


class Trainer:
    def __init__(self, cfg: RunConfig, problems: list[Problem] | None = None):
        self.cfg = cfg
        self.problems = problems if problems is not None else load_problems(cfg)
        if not self.problems:
            raise ValueError("dataset is empty")
        self.by_id = {p.id: p for p in self.problems}
        self.policy = PolicyTable.uniform(self.problems, cfg.learning_rate, cfg.clip_eps, cfg.shared_steps)
        self.tracker = StatsTracker(cfg.weighting())
        self.sched = CurationScheduler(
            self.by_id, cfg.epsilon_c, cfg.pg_enabled, cfg.max_requeue, cfg.readmit_every
        )
        self._solutions = {}
        self._plan_rng = substream(cfg.seed, "plan")

    def _hint(self, pid: str, step: int, attempt: str):
        sol = self._solutions.get(pid)
        if sol is None:
            sol = self._solutions[pid] = tokenize(self.by_id[pid].expert_solution)
        rng = substream(self.cfg.seed, "lambda", attempt, step, pid)
        lam = draw_ratio(rng, self.cfg.beta_min, self.cfg.beta_max)
        return build_prefix(sol, lam, self.cfg.clip_rule)

    def _weight(self, pid: str) -> float:
        return self.tracker.weight(pid) if self.cfg.lp_enabled else 1.0

    def evaluate(self) -> float:
        return float(np.mean([exact_pass_rate(self.policy, p) for p in self.problems]))

    def run(self) -> RunResult:
        cfg = self.cfg
        res = RunResult(cfg, tracker=self.tracker, policy=self.policy)
        step = 0
        while step < cfg.steps:
            if self.sched.epoch_done():
                if cfg.epochs is not None and self.sched.epoch >= cfg.epochs:
                    break
                self.sched.advance_epoch()
            try:
                plan = self.sched.build_batch(cfg.batch_size, self._plan_rng, step + 1)
            except TrainingExhausted:
                res.exhausted = True
                log.info("training exhausted after %d steps", step)
                break
            step += 1
            self._step(plan, res)
        return res

    def _step(self, plan: BatchPlan, res: RunResult) -> None:
        cfg, step, epoch = self.cfg, plan.step, plan.epoch
        batch, rewards, used_w = [], [], []

        def note(pid, kind, rate, w, disp):
            res.weight_log.append({"epoch": epoch, "step": step, "id": pid, "kind": kind,
                                   "pass_rate": rate, "weight": w, "disposition": disp})

        for pid, spec in plan.prefixed_entries:
            rng = substream(cfg.seed, "rollout-hinted", step, pid)
            rate, group = pass_rate(self.policy, self.by_id[pid], cfg.group_size, spec.clipped_len, rng)
            rewards.append(group.rewards)
            w = self._weight(pid)
            if rate == 0.0:
                plan.skipped.append((pid, SkipReason.ALL_FAIL))
                self.sched.queue_prefix(pid, self._hint(pid, step, "requeue"), requeue=True)
                disp = "requeue"
            elif rate == 1.0:
                plan.skipped.append((pid, SkipReason.ALL_PASS))
                disp = "skip"
            else:
                batch.append((group, w))
                disp = "use"
            note(pid, "prefixed", rate, w, disp)

        for pid in plan.standard_entries:
            prob = self.by_id[pid]
            rng = substream(cfg.seed, "rollout", step, pid)
            rate, group = pass_rate(self.policy, prob, cfg.group_size, 0, rng)
            rewards.append(group.rewards)
            self.tracker.update_pass_rate(pid, rate, epoch)
            w = self._weight(pid)
            disp = self.sched.classify(pid, rate, prob.pool)
            if disp is Disposition.USE_FOR_UPDATE:
                batch.append((group, w))
            elif disp is Disposition.SKIP_AND_RETIRE:
                self.sched.retire(pid)
                self.tracker.mark_excluded(pid)
                plan.skipped.append((pid, SkipReason.ALL_PASS))
            elif disp is Disposition.QUEUE_PREFIX:
                self.sched.queue_prefix(pid, self._hint(pid, step, "first"))
                plan.skipped.append((pid, SkipReason.ALL_FAIL))
            else:
                plan.skipped.append((pid, SkipReason.ALL_FAIL))
            note(pid, "standard", rate, w, disp.value)

        weighted = []
        for group, w in batch:
            adv = apply_lp_weight(group_advantage(group.rewards, cfg.advantage_mode), w)
            weighted.append((group, adv))
            used_w.append(w)
        audits = []
        if weighted:
            _, audits = update_policy(self.policy, weighted, cfg.mini_batch, cfg.entropy_coef)
        kl = kl_to_reference(self.policy)
        for a in audits:
            res.optimizer_log.append({"epoch": epoch, "step": step, **a, "kl": kl})

        counts = trend_counts((self.tracker[pid].progress for pid in self.tracker.ids()), cfg.tau)
        res.plans.append(plan)
        res.records.append(StepRecord(
            epoch=epoch,
            step=step,
            mean_reward=float(np.mean(np.concatenate(rewards))) if rewards else 0.0,
            mean_pass_rate=self.evaluate(),
            w_min=min(used_w) if used_w else None,
            w_mean=float(np.mean(used_w)) if used_w else None,
            w_max=max(used_w) if used_w else None,
            kl=kl,
            active_ratio=self.sched.active_ratio,
            prefix_ratio=len(plan.prefixed_entries) / len(plan) if len(plan) else 0.0,
            n_improving=counts[Trend.IMPROVING],
            n_plateauing=counts[Trend.PLATEAUING],
            n_degrading=counts[Trend.DEGRADING],
        ))


def run_training(cfg: RunConfig, problems: list[Problem] | None = None) -> RunResult:
    return Trainer(cfg, problems).run()


def _meta(cfg: RunConfig) -> dict:
    return {"config_hash": cfg.digest(), "tau": cfg.tau, "config": cfg.to_dict()}


def _write_jsonl(path: Path, rows, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def write_outputs(res: RunResult, out_dir: str | Path) -> Path:
    """Write every run artifact into ``out_dir`` atomically (all files or none)."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    meta = _meta(res.config)
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-", dir=out_dir.parent))
    try:
        export(res.records, tmp / "metrics.csv", "csv", meta)
        export(res.records, tmp / "metrics.jsonl", "jsonl", meta)
        _write_jsonl(tmp / "plans.jsonl", (p.to_dict() for p in res.plans), meta)
        _write_jsonl(tmp / "optimizer.jsonl", res.optimizer_log, meta)
        _write_jsonl(tmp / "weights.jsonl", res.weight_log, meta)
        res.tracker.save(tmp / "tracker.jsonl")
        (tmp / "config.txt").write_text(dump_config(res.config), encoding="utf-8")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        tmp.rename(out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir


def cmd_train(cfg: RunConfig, out_dir: str | Path) -> RunResult:
    res = run_training(cfg)
    write_outputs(res, out_dir)
    return res


ABLATION_COLUMNS = ["arm", "median_steps_to_threshold", "median_final_pass_rate", "n_reached", "n_seeds"]


def ablate(base: RunConfig, arms: Sequence[str], seeds: Sequence[int],
           problems: list[Problem] | None = None) -> list[dict]:
    """Run every (arm, seed) pair; one row of medians per arm.

    Runs that never reach the threshold count as infinitely slow.
    """
    if len(arms) < 2:
        raise ValueError("ablation needs at least two arms")
    if len(set(arms)) != len(arms):
        raise ValueError(f"duplicate arm names in {list(arms)}")
    for arm in arms:
        if arm not in MODES:
            raise ValueError(f"unknown arm {arm!r}; choose from {MODES}")
    ds_seed = base.seed if base.dataset_seed is None else base.dataset_seed
    rows = []
    for arm in arms:
        hits, finals = [], []
        for seed in seeds:
            # the problem suite stays fixed; only the training seed varies
            cfg = base.replace(mode=arm, seed=seed, dataset_seed=ds_seed)
            res = run_training(cfg, problems)
            n = res.steps_to_threshold()
            hits.append(math.inf if n is None else n)
            finals.append(res.final_pass_rate)
            log.info("arm=%s seed=%s steps_to_threshold=%s final=%.3f", arm, seed, n, res.final_pass_rate)
        rows.append({
            "arm": arm,
            "median_steps_to_threshold": statistics.median(hits),
            "median_final_pass_rate": statistics.median(finals),
            "n_reached": sum(h != math.inf for h in hits),
            "n_seeds": len(seeds),
            "steps_to_threshold": hits,
            "final_pass_rate": finals,
        })
    return rows


def write_ablation(rows: list[dict], path: str | Path, base: RunConfig | None = None) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        if base is not None:
            fh.write("# " + json.dumps(_meta(base), sort_keys=True) + "\n")
        fh.write(",".join(ABLATION_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(str(r[c]) for c in ABLATION_COLUMNS) + "\n")
    return path
