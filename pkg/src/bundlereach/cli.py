"""Command-line front end: ``run``, ``sweep`` and ``compare``.

Exit codes: 0 success, 1 user or data error (bad flags, model, LP failure,
divergence), 2 internal soundness violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError
from .models import ModelDef, ModelError, builtin, load_model
from .reach import Flowpipe, ReachConfig, ReachError, SoundnessError, reach
from .templates import diagonal_template_sets, random_template_sets


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Strategy:
    kind: str  # "diagonal", "random" or "dynamic"
    a: int
    b: int = 0

    @property
    def label(self) -> str:
        if self.kind == "dynamic":
            return f"dynamic lin={self.a} pca={self.b}"
        return f"{self.a} static {self.kind}"

    def config(self, model: ModelDef, steps: int, depth: int, seed: int, jobs: int) -> ReachConfig:
        if self.kind == "dynamic":
            return ReachConfig(steps, "dynamic", self.a, self.b, subdivision_depth=depth,
                               rng_seed=seed, jobs=jobs)
        make = diagonal_template_sets if self.kind == "diagonal" else random_template_sets
        sets = make(model.dim, self.a, seed)
        return ReachConfig(steps, "static", 0, 0, tuple(sets), depth, seed, jobs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", metavar="NAME", help="builtin model name")
    src.add_argument("--model-file", metavar="PATH", help="model JSON file")
    p.add_argument("--steps", type=int, metavar="N", help="override the model's step count")
    p.add_argument("--static-diagonal", type=int, action="append", default=[], metavar="K",
                   help="K static sets from axis/diagonal directions")
    p.add_argument("--static-random", type=int, action="append", default=[], metavar="K",
                   help="K static sets of random directions")
    p.add_argument("--dynamic", type=int, nargs=2, action="append", default=[],
                   metavar=("L_LIN", "L_PCA"), help="dynamic templates with these lifespans")
    p.add_argument("--trials", type=int, default=10, metavar="T",
                   help="random-strategy trials averaged by compare (default 10)")
    p.add_argument("--subdivision", type=int, default=0, metavar="D",
                   help="Bernstein subdivision depth (default 0)")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--covid-params", choices=("text", "table"), default="text")
    p.add_argument("--covid-corrected", action="store_true",
                   help="use the S_A / gamma*A form of the COVID A equation")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, metavar="N",
                   help="worker threads for bound computations (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bundlereach", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="one reachability run")
    _add_common(run)
    run.add_argument("--scale", type=float, default=1.0, metavar="F",
                     help="grow the initial box about its center by F")
    run.add_argument("--out-flowpipe", metavar="PATH")
    run.add_argument("--out-volumes", metavar="PATH")

    sweep = sub.add_parser("sweep", help="total volume as the initial box grows")
    _add_common(sweep)
    sweep.add_argument("--scales", type=float, nargs="+", required=True, metavar="F")
    sweep.add_argument("--out", metavar="PATH", help="CSV output (default stdout)")

    cmp_ = sub.add_parser("compare", help="total volume of several strategies")
    _add_common(cmp_)
    cmp_.add_argument("--scale", type=float, default=1.0, metavar="F")
    cmp_.add_argument("--out", metavar="PATH", help="CSV output (default stdout)")
    return parser


def _model(args) -> ModelDef:
    if args.model_file:
        return load_model(args.model_file)
    return builtin(args.model, args.covid_params, args.covid_corrected)


def _strategies(args) -> list[Strategy]:
    out = [Strategy("diagonal", k) for k in args.static_diagonal]
    out += [Strategy("random", k) for k in args.static_random]
    out += [Strategy("dynamic", a, b) for a, b in args.dynamic]
    for s in out:
        if s.kind != "dynamic" and s.a < 1:
            raise UsageError("static strategies need K >= 1")
    return out


def _check(args) -> None:
    if args.steps is not None and args.steps < 0:
        raise UsageError("--steps must be non-negative")
    if args.subdivision < 0:
        raise UsageError("--subdivision must be non-negative")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")


def execute(model: ModelDef, strategy: Strategy, args, scale: float = 1.0,
            seed: int | None = None) -> tuple[Flowpipe, ReachConfig, float]:
    steps = model.default_steps if args.steps is None else args.steps
    seed = args.seed if seed is None else seed
    cfg = strategy.config(model, steps, args.subdivision, seed, args.jobs)
    t0 = time.perf_counter()
    fp = reach(model.step_map(), model.initial_set(scale), cfg)
    return fp, cfg, time.perf_counter() - t0


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_run(args) -> int:
    model = _model(args)
    strategies = _strategies(args)
    if len(strategies) != 1:
        raise UsageError("run needs exactly one strategy "
                         "(--static-diagonal, --static-random or --dynamic)")
    fp, cfg, wall = execute(model, strategies[0], args, args.scale)
    config = cfg.to_json()
    config["scale"] = args.scale
    if args.out_flowpipe:
        _write(args.out_flowpipe, fp.to_json(model.name, config))
    if args.out_volumes:
        _write(args.out_volumes, fp.volumes_csv())
    print(f"model: {model.name}  strategy: {strategies[0].label}  steps: {cfg.steps}")
    print(f"total volume: {fp.total_volume!r}")
    print(f"wall time: {wall:.3f} s")
    return 0


def cmd_sweep(args) -> int:
    model = _model(args)
    strategies = _strategies(args)
    if len(strategies) != 1:
        raise UsageError("sweep needs exactly one strategy")
    if any(s <= 0 for s in args.scales):
        raise UsageError("scales must be positive")
    rows = []
    for scale in args.scales:
        fp, _, wall = execute(model, strategies[0], args, scale)
        rows.append([repr(scale), repr(fp.total_volume), f"{wall:.3f}"])
    _write(args.out, _csv(["scale", "total_volume", "wall_time"], rows))
    return 0


def cmd_compare(args) -> int:
    model = _model(args)
    strategies = _strategies(args)
    if len(strategies) < 2:
        raise UsageError("compare needs at least two strategies")
    rows = []
    for s in strategies:
        seeds = [args.seed + t for t in range(args.trials)] if s.kind == "random" else [args.seed]
        totals, walls = [], []
        for seed in seeds:
            fp, _, wall = execute(model, s, args, args.scale, seed)
            totals.append(fp.total_volume)
            walls.append(wall)
        rows.append([s.label, repr(float(np.mean(totals))), f"{sum(walls):.3f}", len(seeds)])
    _write(args.out, _csv(["strategy", "total_volume", "wall_time", "trials"], rows))
    return 0


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s")
    try:
        _check(args)
        return COMMANDS[args.command](args)
    except SoundnessError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ModelError, ReachError, GeometryError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
