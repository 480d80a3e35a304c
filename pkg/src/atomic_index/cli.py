"""Command-line front end: generate, workload, train, eval-rf, bench, serve.

Every run is fully determined by its flags and seeds; nothing is written
outside the paths given on the command line. Exit codes: 0 success, 1
usage error, 2 data error, 3 benchmark finished with failed cells.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from . import bench as bench_mod
from .datasets import (
    LOGNORMAL_SCALE,
    TableFileError,
    generate_lognormal,
    generate_uniform,
    load_table,
    load_workload,
    lognormal_sampler,
    make_workload,
    save_table,
    save_workload,
    uniform_sampler,
)
from .index import build_index
from .model_io import ModelFormatError, load_model, save_model
from .neural import DESK_EPOCHS, PAPER_EPOCHS, DivergenceError, TrainConfig, train_nn
from .regress import fit_polynomial

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3

SEARCH_ALIASES = {
    "branchy": "branchy", "bbs": "branchy",
    "branch-free": "branch_free", "branch_free": "branch_free", "bfs": "branch_free",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_nn_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", choices=["desk", "paper-nn"], default="desk",
                        help="hyperparameter preset: desk (200 epochs) or paper-nn (2000 epochs)")
    parser.add_argument("--lr", type=float, default=None, help="override learning rate")
    parser.add_argument("--momentum", type=float, default=None, help="override momentum")
    parser.add_argument("--batch", type=int, default=None, help="override batch size")
    parser.add_argument("--epochs", type=int, default=None, help="override epoch count")
    parser.add_argument("--delta", type=float, default=None,
                        help="early-stop tolerance on epoch loss change (0 disables)")


def _nn_config(args, seed: int) -> TrainConfig:
    epochs = PAPER_EPOCHS if args.preset == "paper-nn" else DESK_EPOCHS
    return TrainConfig(
        learning_rate=args.lr if args.lr is not None else 0.1,
        momentum=args.momentum if args.momentum is not None else 0.9,
        batch_size=args.batch if args.batch is not None else 64,
        epochs=args.epochs if args.epochs is not None else epochs,
        stop_tolerance=args.delta if args.delta is not None else 0.0,
        seed=seed,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="atomic-index", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a synthetic table file")
    gen.add_argument("--dist", required=True, choices=["uniform", "lognormal"])
    gen.add_argument("--n", required=True, type=int)
    gen.add_argument("--seed", type=int, default=1)
    gen.add_argument("--out", required=True)
    gen.add_argument("--scale", type=float, default=LOGNORMAL_SCALE,
                     help="integer scale applied to lognormal samples")

    wl = sub.add_parser("workload", help="write a query workload for a table")
    wl.add_argument("--data", required=True, help="table file")
    wl.add_argument("--seed", type=int, default=1)
    wl.add_argument("--out", required=True)
    wl.add_argument("--absent-dist", choices=["universe", "uniform", "lognormal"],
                    default="universe", help="distribution of the non-member half")
    wl.add_argument("--scale", type=float, default=LOGNORMAL_SCALE)

    tr = sub.add_parser("train", help="fit a model to a table file")
    tr.add_argument("--model", required=True, choices=["L", "Q", "C", "NN0", "NN1", "NN2"])
    tr.add_argument("--data", required=True, help="table file")
    tr.add_argument("--out", required=True, help="model file")
    tr.add_argument("--seed", type=int, default=1)
    _add_nn_flags(tr)

    ev = sub.add_parser("eval-rf",
                        help="reduction factor of a saved model on a workload")
    ev.add_argument("--model-file", required=True)
    ev.add_argument("--data", required=True, help="table file")
    ev.add_argument("--workload", required=True, help="workload file")

    be = sub.add_parser("bench", help="run the full measurement grid")
    be.add_argument("--tables", required=True,
                    help="comma list of table files or dist:n:seed specs "
                         "(e.g. uniform:1050000:42,lognormal:1050000:7)")
    be.add_argument("--models", default="L,Q,C,NN0,NN1,NN2",
                    help="comma list from L,Q,C,NN0,NN1,NN2,plain")
    be.add_argument("--search", default="both",
                    help="both, branchy/bbs, or branch-free/bfs")
    be.add_argument("--workload-seed", type=int, default=99)
    be.add_argument("--repeats", type=int, default=5)
    be.add_argument("--out", required=True, help="CSV report path")
    be.add_argument("--seed", type=int, default=1, help="seed for NN training")
    _add_nn_flags(be)

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)

    return parser


def _cmd_generate(args) -> int:
    if args.dist == "uniform":
        table = generate_uniform(args.n, args.seed)
    else:
        table = generate_lognormal(args.n, args.seed, scale=args.scale)
    save_table(table, args.out)
    size = os.path.getsize(args.out)
    print(f"wrote {args.out}: n={table.n} min={table.min_key} max={table.max_key} bytes={size}")
    return EXIT_OK


def _cmd_workload(args) -> int:
    table = load_table(args.data)
    sampler = None
    if args.absent_dist == "lognormal":
        sampler = lognormal_sampler(args.scale)
    elif args.absent_dist == "uniform":
        sampler = uniform_sampler
    workload = make_workload(table, args.seed, absent_sampler=sampler)
    save_workload(workload, args.out)
    print(f"wrote {args.out}: queries={workload.size} members={workload.member_count}")
    return EXIT_OK


def _cmd_train(args) -> int:
    table = load_table(args.data)
    if args.model in ("L", "Q", "C"):
        model = fit_polynomial(table, {"L": 1, "Q": 2, "C": 3}[args.model])
    else:
        config = _nn_config(args, args.seed)
        model = train_nn(table, int(args.model[2]), config)
    save_model(model, args.out)
    index = build_index(table, model)
    per_elem = (model.train_seconds or 0.0) / table.n
    print(f"wrote {args.out}: model={args.model} epsilon={index.epsilon} "
          f"train_s_per_elem={per_elem:.3e}")
    return EXIT_OK


def _cmd_eval_rf(args) -> int:
    table = load_table(args.data)
    workload = load_workload(args.workload)
    model = load_model(args.model_file)
    index = build_index(table, model)
    rf = bench_mod.reduction_factor(index, workload)
    print(f"epsilon={index.epsilon} rf_percent={rf:.4f}")
    return EXIT_OK


def _parse_tables(specs: str, workload_seed: int):
    out = []
    for item in specs.split(","):
        item = item.strip()
        if ":" in item and item.split(":")[0] in ("uniform", "lognormal"):
            dist, n_str, seed_str = item.split(":")
            n, seed = int(n_str), int(seed_str)
            if dist == "uniform":
                table = generate_uniform(n, seed)
                sampler = uniform_sampler
                name = "uni"
            else:
                table = generate_lognormal(n, seed)
                sampler = lognormal_sampler()
                name = "logn"
            workload = make_workload(table, workload_seed, absent_sampler=sampler)
        else:
            table = load_table(item)
            workload = make_workload(table, workload_seed)
            name = os.path.splitext(os.path.basename(item))[0]
        out.append((name, table, workload))
    return out


def _cmd_bench(args) -> int:
    if args.search == "both":
        kinds = ["branchy", "branch_free"]
    elif args.search in SEARCH_ALIASES:
        kinds = [SEARCH_ALIASES[args.search]]
    else:
        print(f"unknown search kind {args.search!r}", file=sys.stderr)
        return EXIT_USAGE
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in bench_mod.MODEL_NAMES and m != bench_mod.PLAIN_MODEL:
            print(f"unknown model {m!r}", file=sys.stderr)
            return EXIT_USAGE

    datasets = _parse_tables(args.tables, args.workload_seed)
    config = bench_mod.SuiteConfig(
        query_repeats=args.repeats,
        nn_config=_nn_config(args, args.seed),
    )
    reports = bench_mod.run_suite(datasets, models, kinds, config)
    bench_mod.write_csv(reports, args.out)
    print(bench_mod.format_table(reports))
    print(f"wrote {args.out}: {len(reports)} rows")
    if any(r.flags.startswith("error:") for r in reports):
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    handlers = {
        "generate": _cmd_generate,
        "workload": _cmd_workload,
        "train": _cmd_train,
        "eval-rf": _cmd_eval_rf,
        "bench": _cmd_bench,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (TableFileError, ModelFormatError, DivergenceError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
