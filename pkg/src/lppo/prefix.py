"""Expert-solution prefixes for hard problems.

A prefix keeps ``floor(lam * M)`` of the ``M`` solution tokens, pulled back to
the last line end inside that budget so the hint always ends on a complete
line. ``lam`` is drawn uniformly from ``[beta_min, beta_max]`` each time a
problem is hinted.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .dataset import Pool, Problem

_TOKEN_RE = re.compile(r"(\S+)(\s*)")


@dataclass(frozen=True)
class TokenSeq:
    """Whitespace tokens plus the exact separators needed to rebuild the text.

    ``newline_marks`` holds 1-based indices of tokens followed by a line break.
    """

    tokens: tuple[str, ...]
    separators: tuple[str, ...]
    leading: str = ""
    newline_marks: frozenset[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self, n: int | None = None) -> str:
        """Source text of the first ``n`` tokens (all tokens when ``n`` is None)."""
        n = len(self.tokens) if n is None else n
        if n == 0:
            return ""
        return self.leading + "".join(t + s for t, s in zip(self.tokens[:n], self.separators[:n]))

    def head(self, n: int) -> "TokenSeq":
        return TokenSeq(
            self.tokens[:n],
            self.separators[:n],
            self.leading if n else "",
            frozenset(i for i in self.newline_marks if i <= n),
        )


def tokenize(text: str) -> TokenSeq:
    """Split on whitespace, remembering which tokens end a line."""
    if not text or not text.strip():
        raise ValueError("cannot tokenize an empty expert solution")
    stripped = text.lstrip()
    leading = text[: len(text) - len(stripped)]
    tokens, seps, marks = [], [], set()
    for i, m in enumerate(_TOKEN_RE.finditer(stripped), start=1):
        tokens.append(m.group(1))
        seps.append(m.group(2))
        if "\n" in m.group(2) or "\r" in m.group(2):
            marks.add(i)
    return TokenSeq(tuple(tokens), tuple(seps), leading, frozenset(marks))


def draw_ratio(rng: np.random.Generator, beta_min: float = 0.3, beta_max: float = 0.8) -> float:
    if not 0.0 <= beta_min <= beta_max <= 1.0:
        raise ValueError(f"need 0 <= beta_min <= beta_max <= 1, got ({beta_min}, {beta_max})")
    if beta_min == beta_max:
        return float(beta_min)
    return float(rng.uniform(beta_min, beta_max))


@dataclass(frozen=True)
class PrefixSpec:
    lam: float
    raw_len: int
    clipped_len: int
    prefix: TokenSeq

    @property
    def text(self) -> str:
        return self.prefix.text()


def build_prefix(solution: TokenSeq, lam: float, clip: str = "at_or_before") -> PrefixSpec:
    """Truncate ``solution`` to ``floor(lam * M)`` tokens, then back to the last line end.

    ``clip="strictly_before"`` only accepts line ends at indices below the raw
    length. Without any usable line end the raw length is kept.
    """
    m = len(solution)
    if m < 1:
        raise ValueError("solution must contain at least one token")
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    raw_len = math.floor(lam * m)
    if clip == "at_or_before":
        marks = [i for i in solution.newline_marks if i <= raw_len]
    elif clip == "strictly_before":
        marks = [i for i in solution.newline_marks if i < raw_len]
    else:
        raise ValueError(f"unknown clip rule {clip!r}")
    clipped = max(marks) if marks else raw_len
    return PrefixSpec(float(lam), raw_len, clipped, solution.head(clipped))


@dataclass(frozen=True)
class AugmentedPrompt:
    id: str
    question: Any
    prefix: PrefixSpec | None

    @property
    def prefix_len(self) -> int:
        return 0 if self.prefix is None else self.prefix.clipped_len

    @property
    def prefix_text(self) -> str:
        return "" if self.prefix is None else self.prefix.text

    @property
    def context(self) -> Any:
        """Question concatenated with the prefix; the bare question when the prefix is empty."""
        if self.prefix_len == 0:
            return self.question
        if isinstance(self.question, str):
            return self.question + "\n" + self.prefix_text
        return (self.question, self.prefix.prefix.tokens)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "prefix_text": self.prefix_text,
            "prefix_len": self.prefix_len,
            "lambda": None if self.prefix is None else self.prefix.lam,
        }


def augment(problem: Problem, prefix: PrefixSpec) -> AugmentedPrompt:
    if problem.pool is not Pool.PREFIX_ELIGIBLE:
        raise ValueError(f"problem {problem.id!r} has no expert solution")
    return AugmentedPrompt(problem.id, problem.question, prefix)


def sample_prefix(
    problem: Problem,
    rng: np.random.Generator,
    beta_min: float = 0.3,
    beta_max: float = 0.8,
    clip: str = "at_or_before",
    tokenizer: Callable[[str], TokenSeq] = tokenize,
) -> AugmentedPrompt:
    """Draw a fresh ratio and build the hinted prompt for ``problem``."""
    if problem.pool is not Pool.PREFIX_ELIGIBLE:
        raise ValueError(f"problem {problem.id!r} has no expert solution")
    lam = draw_ratio(rng, beta_min, beta_max)
    return augment(problem, build_prefix(tokenizer(problem.expert_solution), lam, clip))
