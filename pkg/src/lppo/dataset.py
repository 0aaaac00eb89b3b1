"""Problem records, JSONL loading and the synthetic chain-problem generator."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid generator configs."""


class Pool(str, enum.Enum):
    STANDARD = "standard"
    PREFIX_ELIGIBLE = "prefix_eligible"


@dataclass(frozen=True)
class ChainProblemSpec:
    """A T-step chain with B actions per step and exactly one correct path."""

    steps: int
    branching: int
    correct_path: tuple[int, ...]

    def __post_init__(self):
        if self.steps < 1 or self.branching < 1:
            raise DatasetError("steps and branching must be positive")
        if len(self.correct_path) != self.steps:
            raise DatasetError(
                f"correct_path has {len(self.correct_path)} entries, expected {self.steps}"
            )
        if any(not 0 <= a < self.branching for a in self.correct_path):
            raise DatasetError("correct_path entries must lie in [0, branching)")

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "branching": self.branching,
            "correct_path": list(self.correct_path),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainProblemSpec":
        return cls(int(d["steps"]), int(d["branching"]), tuple(int(a) for a in d["correct_path"]))


def render_solution(path: Iterable[int]) -> str:
    # one action token per line, trailing newline after every step
    return "".join(f"{a}\n" for a in path)


@dataclass(frozen=True)
class Problem:
    id: str
    question: Any
    gold_answer: str
    expert_solution: str | None = None
    pool: Pool = Pool.STANDARD

    def __post_init__(self):
        if self.pool is Pool.PREFIX_ELIGIBLE and not self.expert_solution:
            raise DatasetError(f"problem {self.id!r} is prefix-eligible but has no expert solution")

    @property
    def chain(self) -> ChainProblemSpec:
        """Chain spec carried in ``question`` (simulation mode only)."""
        if not isinstance(self.question, dict):
            raise DatasetError(f"problem {self.id!r} has no chain spec")
        return ChainProblemSpec.from_dict(self.question)

    def to_record(self) -> dict:
        rec = {"id": self.id, "question": self.question, "answer": self.gold_answer}
        if self.expert_solution is not None:
            rec["expert_solution"] = self.expert_solution
        return rec


@dataclass(frozen=True)
class DatasetConfig:
    n_problems: int = 64
    steps_range: tuple[int, int] = (4, 8)
    branching: int = 4
    prefix_eligible_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.steps_range
        if lo < 1 or hi < lo:
            raise DatasetError(f"invalid steps_range {self.steps_range}")
        if not 0.0 <= self.prefix_eligible_fraction <= 1.0:
            raise DatasetError("prefix_eligible_fraction must lie in [0, 1]")
        if self.n_problems < 0:
            raise DatasetError("n_problems must be non-negative")


_REQUIRED = ("id", "question", "answer")


def parse_record(obj: Any, lineno: int) -> Problem:
    if not isinstance(obj, dict):
        raise DatasetError(f"line {lineno}: expected a JSON object")
    for key in _REQUIRED:
        if key not in obj:
            raise DatasetError(f"line {lineno}: missing required key {key!r}")
    sol = obj.get("expert_solution")
    if sol == "":
        sol = None
    pool = Pool.PREFIX_ELIGIBLE if sol is not None else Pool.STANDARD
    return Problem(str(obj["id"]), obj["question"], str(obj["answer"]), sol, pool)


def load_dataset(path: str | Path, format: str = "jsonl") -> list[Problem]:
    """Read and validate a JSONL problem file.

    Blank lines are ignored. Line numbers in error messages are 1-based.
    """
    if format != "jsonl":
        raise DatasetError(f"unsupported dataset format {format!r}")
    problems: list[Problem] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            prob = parse_record(obj, lineno)
            if prob.id in seen:
                raise DatasetError(
                    f"duplicate id {prob.id!r} on line {lineno} (first seen on line {seen[prob.id]})"
                )
            seen[prob.id] = lineno
            problems.append(prob)
    return problems


def dumps_dataset(problems: Iterable[Problem]) -> str:
    return "".join(json.dumps(p.to_record(), ensure_ascii=False) + "\n" for p in problems)


def save_dataset(problems: Iterable[Problem], path: str | Path) -> None:
    Path(path).write_text(dumps_dataset(problems), encoding="utf-8")


def generate_synthetic(config: DatasetConfig) -> list[Problem]:
    """Deterministic chain-problem suite for a given config.

    ``floor(n * fraction)`` problems, chosen at random, carry the rendered
    correct path as their expert solution.
    """
    if config.branching < 2:
        raise DatasetError("branching must be >= 2 (a one-action chain is trivially solved)")
    rng = np.random.default_rng(config.seed)
    lo, hi = config.steps_range
    n = config.n_problems
    width = max(3, len(str(max(n - 1, 0))))
    n_eligible = math.floor(n * config.prefix_eligible_fraction)
    eligible = set(rng.permutation(n)[:n_eligible].tolist())
    problems = []
    for i in range(n):
        steps = int(rng.integers(lo, hi + 1))
        path = tuple(int(a) for a in rng.integers(0, config.branching, size=steps))
        chain = ChainProblemSpec(steps, config.branching, path)
        answer = " ".join(str(a) for a in path)
        if i in eligible:
            problems.append(
                Problem(f"p{i:0{width}d}", chain.to_dict(), answer,
                        render_solution(path), Pool.PREFIX_ELIGIBLE)
            )
        else:
            problems.append(Problem(f"p{i:0{width}d}", chain.to_dict(), answer))
    return problems
