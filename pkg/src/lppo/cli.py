"""Command-line entry points: ``train``, ``ablate``, ``report`` and ``serve``.

Set ``LPPO_LOG`` (e.g. ``LPPO_LOG=INFO``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, RunConfig, load_config


def _seeds(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _load(path: str | None) -> RunConfig:
    return load_config(path) if path else RunConfig()


def cmd_train(args) -> int:
    from .train import cmd_train as train

    cfg = _load(args.config)
    res = train(cfg, args.out)
    n = res.steps_to_threshold()
    print(f"{len(res.records)} steps, final mean pass rate {res.final_pass_rate:.4f}, "
          f"steps to {cfg.threshold}: {n if n is not None else 'not reached'} -> {args.out}")
    return 0


def cmd_ablate(args) -> int:
    from .train import ABLATION_COLUMNS, ablate, write_ablation

    cfg = _load(args.config)
    arms = [a.strip() for a in args.arms.split(",") if a.strip()]
    rows = ablate(cfg, arms, _seeds(args.seeds))
    write_ablation(rows, args.out, cfg)
    print("  ".join(ABLATION_COLUMNS))
    for r in rows:
        print("  ".join(str(r[c]) for c in ABLATION_COLUMNS))
    return 0


def cmd_report(args) -> int:
    from .metrics import export, load_jsonl, read_meta

    records = load_jsonl(args.inp)
    export(records, args.out, "csv", read_meta(args.inp))
    print(f"{len(records)} rows -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .dataset import load_dataset
    from .service import SchedulerService, make_server
    from .train import load_problems

    cfg = _load(args.config)
    if args.dataset:
        problems = load_dataset(args.dataset)
    elif args.config:
        problems = load_problems(cfg)
    else:
        problems = []
    service = SchedulerService(problems, cfg, args.snapshot_dir)
    if args.socket:
        server = make_server(service, args.socket)
        logging.getLogger(__name__).info("serving on %s", args.socket)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
    else:
        service.serve_stream(sys.stdin, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lppo")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one training job")
    t.add_argument("--config", required=True)
    t.add_argument("--out", default="runs/latest")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("ablate", help="compare modes across seeds")
    a.add_argument("--config", required=True)
    a.add_argument("--arms", default="grpo_baseline,lp_only,pg_only,lppo")
    a.add_argument("--seeds", default="0-9", help="comma list and/or ranges, e.g. 0-4,7")
    a.add_argument("--out", default="ablation.csv")
    a.set_defaults(func=cmd_ablate)

    r = sub.add_parser("report", help="convert a metrics JSONL file to CSV")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)

    s = sub.add_parser("serve", help="scheduler service over stdin/stdout or TCP")
    s.add_argument("--socket", help="host:port to listen on (default: stdin/stdout)")
    s.add_argument("--config")
    s.add_argument("--dataset")
    s.add_argument("--snapshot-dir", default=".")
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LPPO_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
