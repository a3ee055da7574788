"""Command-line front end.

    tninfer pr     --model M.uai [--evidence E.evid]
    tninfer mar    --model M.uai [--evidence E.evid]
    tninfer mpe    --model M.uai [--evidence E.evid]
    tninfer mmap   --model M.uai --query Q.query [--evidence E.evid]
    tninfer sample --model M.uai --num-samples N [--seed S] [--evidence E.evid]
    tninfer stats  --model M.uai [--evidence E.evid]

Failures print ``error[<category>]: <message>`` on stderr, where category is
one of parse, shape, capacity, inconsistent-evidence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

from . import tasks
from .errors import InferenceError, ParseError
from .order import complexity_report
from .uai import build_network, parse_evidence, parse_model, parse_query, write_result

TASKS = ("pr", "mar", "mpe", "mmap", "sample", "stats")
EXIT_CODES = {"parse": 3, "shape": 4, "capacity": 5, "inconsistent-evidence": 6}


@dataclass
class RunConfig:
    task: str
    model_path: str
    evidence_path: str | None = None
    query_path: str | None = None
    num_samples: int | None = None
    seed: int | None = None
    order_strategy: str = "greedy"
    space_cap: float = 28.0
    output_path: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "mmap" and not self.query_path:
            raise ValueError("mmap requires a query file")
        if self.task == "sample" and (self.num_samples is None or self.num_samples < 1):
            raise ValueError("sample requires --num-samples >= 1")


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None


def execute(cfg: RunConfig) -> str:
    """Run one task and return the result text. Raises :class:`InferenceError`."""
    model = parse_model(_read(cfg.model_path))
    net = build_network(model)
    evidence = {}
    if cfg.evidence_path:
        evidence = parse_evidence(_read(cfg.evidence_path), model.cardinalities)
    opts = dict(order=cfg.order_strategy, space_cap=cfg.space_cap)

    if cfg.task == "pr":
        return write_result("PR", tasks.compute_pr(net, evidence, **opts))
    if cfg.task == "mar":
        return write_result("MAR", tasks.compute_mar(net, evidence, **opts))
    if cfg.task == "mpe":
        return write_result("MPE", tasks.compute_mpe(net, evidence, **opts))
    if cfg.task == "mmap":
        query = parse_query(_read(cfg.query_path), model.num_vars)
        return write_result("MMAP", tasks.compute_mmap(net, evidence, query, **opts))
    if cfg.task == "sample":
        batch = tasks.draw_samples(net, evidence, cfg.num_samples, cfg.seed, **opts)
        return write_result("SAMPLE", batch)
    aug, _ = tasks.augment(tasks.condition(net, evidence), tasks.REAL)
    tree = tasks.plan(aug, cfg.order_strategy)
    return f"{complexity_report(aug, tree)}\n"


def run(cfg: RunConfig) -> tuple[int, str]:
    """Exit status and text (the result on success, a one-line diagnostic otherwise)."""
    try:
        text = execute(cfg)
    except InferenceError as exc:
        return EXIT_CODES[exc.category], f"error[{exc.category}]: {exc}\n"
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="ascii")
    return 0, text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tninfer", description="Exact inference on UAI models by tensor network contraction.")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--model", required=True, help="UAI model file")
        p.add_argument("--evidence", help="evidence file: <k> <var value>...")
        p.add_argument("--order", choices=("greedy", "exhaustive"), default="greedy")
        p.add_argument("--space-cap", type=float, default=28.0,
                       help="refuse trees whose largest tensor exceeds 2**cap elements")
        p.add_argument("--output", help="write the result here instead of stdout")
        if task == "mmap":
            p.add_argument("--query", required=True, help="query file: <k> <var>...")
        if task == "sample":
            p.add_argument("--num-samples", type=int, required=True)
            p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            task=args.task,
            model_path=args.model,
            evidence_path=args.evidence,
            query_path=getattr(args, "query", None),
            num_samples=getattr(args, "num_samples", None),
            seed=getattr(args, "seed", None),
            order_strategy=args.order,
            space_cap=args.space_cap,
            output_path=args.output,
        )
    except ValueError as exc:
        parser.error(str(exc))
    status, text = run(cfg)
    if status:
        sys.stderr.write(text)
    elif not cfg.output_path:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
