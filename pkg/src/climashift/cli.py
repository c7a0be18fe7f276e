"""Command-line interface.

Subcommands mirror the pipeline stages:

    climashift generate   --config cfg.json
    climashift split      --config cfg.json
    climashift train      --config cfg.json [--generate] [--jobs N]
    climashift eval       --config cfg.json
    climashift experiment --config cfg.json [--generate] [--jobs N] [--repeat K]
    climashift report RESULTS_DIR [--threshold PCT]

Without --config the built-in desk-scale defaults apply. --seed, --out and
--protocols override the loaded config. CLIMASHIFT_LOG={error,info,debug}
selects stderr log verbosity.

Exit codes: 0 success; 1 invalid config; 2 missing or corrupt data;
3 experiment completed but some training cells failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import (ExperimentConfig, default_config, load_config,
                     with_overrides)
from .datasetio import write_dataset
from .errors import (ConfigError, DataIntegrityError, IncompleteRecordsError,
                     MissingFileError)
from .evaluation import (DEFAULT_FLAG_THRESHOLD, build_results_table,
                         records_from_csv, table_to_text)
from .runner import (build_plans, dataset_dir, ensure_dataset, results_dir,
                     run_evaluation_from_disk, run_experiment, run_training,
                     write_plans, write_records, write_tables)
from .synth import build_dataset

log = logging.getLogger("climashift")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("CLIMASHIFT_LOG", "info").lower()
    level = _LOG_LEVELS.get(name, logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = load_config(args.config) if args.config else default_config()
    protocols = None
    if getattr(args, "protocols", None):
        protocols = tuple(p.strip() for p in args.protocols.split(",") if p.strip())
    return with_overrides(config, seed=getattr(args, "seed", None),
                          output_dir=getattr(args, "out", None),
                          protocols=protocols)


def _add_common(parser: argparse.ArgumentParser, jobs: bool = False,
                generate: bool = False) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="JSON experiment config (defaults apply if omitted)")
    parser.add_argument("--out", metavar="DIR",
                        help="override the config's output directory")
    parser.add_argument("--seed", type=int, metavar="U64",
                        help="override the config's root seed")
    parser.add_argument("--protocols", metavar="CSV",
                        help="comma-separated subset of "
                             "baseline,time_shift,ssp_rotation")
    if jobs:
        parser.add_argument("--jobs", type=int, default=1, metavar="N",
                            help="train independent cells in up to N threads")
    if generate:
        parser.add_argument("--generate", action="store_true",
                            help="generate the dataset first if it is missing")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    directory = dataset_dir(config)
    dataset = build_dataset(config.generation, config.seed)
    write_dataset(dataset, directory, dtype=config.dtype)
    print(directory)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = ensure_dataset(config, allow_generate=False)
    plans = build_plans(config, dataset)
    write_plans(plans, results_dir(config) / "splits")
    print(f"wrote {len(plans)} split plans to {results_dir(config) / 'splits'}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = ensure_dataset(config, allow_generate=args.generate)
    plans = build_plans(config, dataset)
    write_plans(plans, results_dir(config) / "splits")
    _, failures, checksums = run_training(config, dataset, plans,
                                          jobs=args.jobs)
    print(f"trained {len(checksums)} models into "
          f"{results_dir(config) / 'models'}")
    for label, message in failures:
        print(f"FAILED {label}: {message}")
    return 3 if failures else 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args)
    dataset = ensure_dataset(config, allow_generate=False)
    records = run_evaluation_from_disk(config, dataset)
    out = results_dir(config)
    write_records(records, out)
    print(f"wrote {len(records)} records to {out / 'records.csv'}")
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    base = _load_config(args)
    worst = 0
    for repeat in range(args.repeat):
        config = base
        if args.repeat > 1:
            seed = base.seed + repeat
            config = with_overrides(
                base, seed=seed,
                output_dir=str(Path(base.output_dir) / f"seed-{seed}"))
        result = run_experiment(config, jobs=args.jobs,
                                allow_generate=args.generate)
        if result.table is not None:
            print(table_to_text(result.table, threshold=DEFAULT_FLAG_THRESHOLD))
        print(f"{len(result.records)} records in {result.results_path}")
        for label, message in result.failures:
            print(f"FAILED {label}: {message}")
        if result.failures:
            worst = 3
    return worst


def cmd_report(args: argparse.Namespace) -> int:
    directory = Path(args.results_dir)
    records_path = directory / "records.csv"
    if not records_path.is_file():
        raise MissingFileError(f"no records file at {records_path}")
    records = records_from_csv(records_path.read_text())
    table = build_results_table(records)
    print(table_to_text(table, threshold=args.threshold))
    write_tables(table, directory, threshold=args.threshold)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="climashift",
        description="Distribution-shift evaluation harness for climate "
                    "emulators on synthetic scenario data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build and write the dataset")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="write split plan JSONs")
    _add_common(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train all (emulator, oracle, plan) cells")
    _add_common(p, jobs=True, generate=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate persisted models on test splits")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("experiment",
                       help="full pipeline: generate, split, train, eval, report")
    _add_common(p, jobs=True, generate=True)
    p.add_argument("--repeat", type=int, default=1, metavar="K",
                   help="run K seeds (seed, seed+1, ...) into per-seed dirs")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", help="rebuild tables from a records CSV")
    p.add_argument("results_dir", help="directory containing records.csv")
    p.add_argument("--threshold", type=float, default=DEFAULT_FLAG_THRESHOLD,
                   metavar="PCT",
                   help="flag cells whose percent change exceeds this")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return 1
    except (DataIntegrityError, IncompleteRecordsError, OSError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
