"""
Command-line entry point.

Every subcommand runs the pipeline up to its own stage and writes that stage's
artifacts into the output directory.  With ``--reuse`` a previously written
split, tuning result and model dumps are picked up instead of recomputed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..corpus import dataset_summary
from ..errors import ThemetricError
from .config import AuditConfig
from .pipeline import Pipeline, clean, run_full, save_checkpoints
from .report import (
    SEGMENT_COLUMNS,
    _csv,
    atomic_write_text,
    dumps,
    recommendation_rows,
)

COMMANDS = (
    "preprocess",
    "split",
    "tune",
    "train",
    "recommend",
    "audit-data",
    "audit-recs",
    "audit-groups",
    "run-all",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="themetric", description="Audit theme-level bias in recommenders.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, help="random seed (overrides seed)")
    p.add_argument("--algos", help="comma-separated algorithms (overrides algorithms)")
    p.add_argument("--reuse", action="store_true", help="reuse split, tuning and models found in the output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> AuditConfig:
    cfg = AuditConfig.load(args.config)
    algos = tuple(a.strip() for a in args.algos.split(",") if a.strip()) if args.algos else None
    return cfg.with_overrides(output_dir=args.out, seed=args.seed, algorithms=algos)


def _write_json(path: Path, obj) -> None:
    atomic_write_text(path, dumps(clean(obj)))
    print(path)


def run_command(command: str, cfg: AuditConfig, reuse: bool = False) -> None:
    if command == "run-all":
        run_full(cfg, reuse)
        print(cfg.output_dir)
        return
    pipe = Pipeline(cfg, reuse)
    out = pipe.out
    if command == "preprocess":
        _write_json(out / "dataset.json", dataset_summary(pipe.dataset))
    elif command == "split":
        pipe.split
        save_checkpoints(pipe)
    elif command in ("tune", "train"):
        for p in save_checkpoints(pipe, models=command == "train"):
            print(p)
    elif command == "recommend":
        save_checkpoints(pipe, models=True)
        for algo, recs in pipe.recommendations.items():
            path = out / f"recommendations_{algo}.csv"
            rows = recommendation_rows(recs, pipe.dataset.user_ids, pipe.dataset.item_ids)
            atomic_write_text(path, _csv(("user_id", "rank", "item_id", "score"), rows))
            print(path)
    elif command == "audit-data":
        _write_json(out / "data_bias.json", pipe.data_bias())
    elif command == "audit-recs":
        save_checkpoints(pipe, models=True)
        _write_json(out / "rec_bias.json", pipe.rec_bias())
    elif command == "audit-groups":
        save_checkpoints(pipe, models=True)
        _write_json(out / "group_bias.json", pipe.group_bias())
        rows = ([r[c] for c in SEGMENT_COLUMNS] for r in pipe.segment_rows())
        atomic_write_text(out / "segments.csv", _csv(SEGMENT_COLUMNS, rows))
        print(out / "segments.csv")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        run_command(args.command, cfg, args.reuse)
    except ThemetricError as e:
        print(f"themetric: error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
