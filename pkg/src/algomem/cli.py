"""Command line entry point.

Subcommands: train, eval, transfer, selftest, trace.  Experiments are
described by flat key=value config files; any key can be overridden on
the command line as extra ``key=value`` arguments.  The worker count
can be forced through the ``ALGOMEM_WORKERS`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

import numpy as np

from algomem.evaluate import (Checkpoint, evaluate_generalization, run_transfer)
from algomem.genome import init_genome
from algomem.machine import run_episode
from algomem.nes import NesConfig
from algomem.network import Network
from algomem.selftest import run_selftest
from algomem.tasks import get_task
from algomem.train import Trainer, TrainConfig

TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
NES_KEYS = {f.name: f.type for f in fields(NesConfig)}


def _parse_value(raw: str):
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def load_config(path=None, overrides=()):
    """Flat key=value pairs from file, then from the command line."""
    values = {}
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"malformed config line: {line!r}")
                key, raw = line.split("=", 1)
                values[key.strip()] = _parse_value(raw.strip())
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must be key=value, got {item!r}")
        key, raw = item.split("=", 1)
        values[key] = _parse_value(raw)
    return values


def _split_config(values):
    train_kwargs, nes_kwargs, extra = {}, {}, {}
    for key, val in values.items():
        if key in TRAIN_KEYS:
            train_kwargs[key] = val
        elif key in NES_KEYS:
            nes_kwargs[key] = val
        else:
            extra[key] = val
    out_dir = extra.pop("out_dir", "runs")
    if extra:
        raise ValueError(f"unknown config keys: {sorted(extra)}")
    if "ALGOMEM_WORKERS" in os.environ:
        train_kwargs["workers"] = int(os.environ["ALGOMEM_WORKERS"])
    return train_kwargs, nes_kwargs, out_dir


def cmd_train(args):
    values = load_config(args.config, args.overrides)
    train_kwargs, nes_kwargs, out_dir = _split_config(values)
    if args.out_dir:
        out_dir = args.out_dir
    if args.resume:
        trainer = Trainer.load_checkpoint(args.resume, out_dir)
    else:
        if "task" not in train_kwargs:
            raise ValueError("config must set task=<name>")
        trainer = Trainer(TrainConfig(**train_kwargs), NesConfig(**nes_kwargs),
                          out_dir)
    solved = trainer.run()
    print(f"task={trainer.cfg.task} solved={solved} iterations={trainer.iteration} "
          f"learning={trainer.learning_iterations} restarts={trainer.restarts}")
    return 0


def _levels(raw):
    return [int(v) for v in raw.split(",") if v]


def cmd_eval(args):
    ckpt = Checkpoint.load(args.checkpoint)
    report = evaluate_generalization(ckpt, levels=_levels(args.levels),
                                     count=args.count)
    _emit_report(report, args.out)
    return 0 if report.all_solved or not args.strict else 1


def cmd_transfer(args):
    ckpt = Checkpoint.load(args.checkpoint)
    try:
        report = run_transfer(ckpt, args.variant, levels=_levels(args.levels),
                              count=args.count)
    except ValueError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    _emit_report(report, args.out)
    return 0 if report.all_solved or not args.strict else 1


def _emit_report(report, out):
    for lvl in report.levels:
        note = f" generator_errors={lvl.generator_errors}" if lvl.generator_errors else ""
        print(f"level {lvl.level:5d}: {lvl.solved}/{lvl.total} "
              f"({lvl.percent:.1f}%){note}")
    if out:
        report.write_csv(out if out.endswith(".csv") else out + ".csv")
        report.write_json(out + ".json" if not out.endswith(".csv")
                          else out[:-4] + ".json")


def cmd_selftest(args):
    ok = run_selftest(mutate_addition=args.mutate_addition)
    return 0 if ok else 1


def cmd_trace(args):
    task = get_task(args.task)
    variant = args.variant or task.default_variant
    sample = task.generate(args.level, args.seed, variant)
    arch = task.config(variant)
    if args.checkpoint:
        ckpt = Checkpoint.load(args.checkpoint)
        arch = ckpt.arch(variant)
        theta = ckpt.theta
    else:
        theta = init_genome(arch, np.random.default_rng(args.seed))
    net = Network(theta, arch)
    trace = run_episode(net, task.make_module(sample), sample.t_max,
                        record_heads=True)
    for step, entry in enumerate(trace.head_log, 1):
        record = {"step": step, "op": int(trace.ops[step - 1]), **entry}
        print(json.dumps(record))
    print(json.dumps({"halted": trace.halted, "steps": len(trace),
                      "t_max": sample.t_max, "memory_full": trace.memory_full}))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="algomem",
        description="Train and evaluate memory-coupled algorithmic machines.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the evolutionary training loop")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--out-dir", help="output directory (overrides config)")
    p.add_argument("overrides", nargs="*", help="key=value overrides")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="generalization evaluation at high levels")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--levels", default="100,500,1000")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--out", help="report path stem")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero unless every sample is solved")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("transfer", help="replay the curriculum on a new variant")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--variant", required=True)
    p.add_argument("--levels", default=",".join(str(l) for l in range(1, 12)))
    p.add_argument("--count", type=int, default=32)
    p.add_argument("--out", help="report path stem")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(fn=cmd_transfer)

    p = sub.add_parser("selftest", help="run the built-in property suites")
    p.add_argument("--mutate-addition", action="store_true",
                   help="corrupt the addition oracle to verify detection")
    p.set_defaults(fn=cmd_selftest)

    p = sub.add_parser("trace", help="emit per-step head traces for one sample")
    p.add_argument("--task", required=True)
    p.add_argument("--variant")
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint")
    p.set_defaults(fn=cmd_trace)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
