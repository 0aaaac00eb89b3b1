"""Per-step telemetry records, trend classification, reporting EMA and file export."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence


class Trend(str, enum.Enum):
    IMPROVING = "improving"
    PLATEAUING = "plateauing"
    DEGRADING = "degrading"
    UNDEFINED = "undefined"


def classify_trend(progress: float | None, tau: float = 0.01) -> Trend:
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if progress is None:
        return Trend.UNDEFINED
    if progress > tau:
        return Trend.IMPROVING
    if progress < -tau:
        return Trend.DEGRADING
    return Trend.PLATEAUING


def trend_counts(progresses: Iterable[float | None], tau: float = 0.01) -> dict[Trend, int]:
    counts = {Trend.IMPROVING: 0, Trend.PLATEAUING: 0, Trend.DEGRADING: 0}
    for d in progresses:
        t = classify_trend(d, tau)
        if t is not Trend.UNDEFINED:
            counts[t] += 1
    return counts


def smooth(series: Sequence[float], alpha: float = 0.9) -> list[float]:
    """History-weighted EMA used for plotting: ``s'_t = alpha * s'_{t-1} + (1 - alpha) * s_t``."""
    if len(series) == 0:
        raise ValueError("cannot smooth an empty series")
    out = [float(series[0])]
    for x in series[1:]:
        out.append(alpha * out[-1] + (1.0 - alpha) * float(x))
    return out


@dataclass
class StepRecord:
    epoch: int
    step: int
    mean_reward: float
    mean_pass_rate: float
    w_min: float | None
    w_mean: float | None
    w_max: float | None
    kl: float
    active_ratio: float
    prefix_ratio: float
    n_improving: int
    n_plateauing: int
    n_degrading: int


COLUMNS = [f.name for f in fields(StepRecord)]


def _header(meta: dict | None) -> str | None:
    if not meta:
        return None
    return "# " + json.dumps(meta, sort_keys=True)


def export(records: Sequence[StepRecord], path: str | Path, format: str = "csv", meta: dict | None = None) -> Path:
    """Write records one per row/line; ``meta`` goes into a leading ``#`` comment line."""
    path = Path(path)
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write metrics to {path}: {exc.strerror}") from exc
    with fh:
        head = _header(meta)
        if head:
            fh.write(head + "\n")
        if format == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in records:
                w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v
                            for v in (getattr(r, c) for c in COLUMNS)])
        elif format == "jsonl":
            for r in records:
                fh.write(json.dumps(asdict(r)) + "\n")
        else:
            raise ValueError(f"unknown export format {format!r}")
    return path


def load_jsonl(path: str | Path) -> list[StepRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            out.append(StepRecord(**json.loads(line)))
    return out


def read_meta(path: str | Path) -> dict | None:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    return json.loads(first[2:]) if first.startswith("# ") else None
