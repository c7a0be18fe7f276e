"""End-to-end experiment driver.

Stages: generate (dataset on disk), split (plan JSONs), train (model
JSONs), eval (records CSV), report (percent-change tables). Every stage
is a pure function of (config, seed) plus the artifacts of the previous
stages, so a rerun with the same config produces byte-identical records
and tables. The run manifest additionally captures per-stage wall-clock
and artifact checksums; its timing fields are the only nondeterministic
bytes an experiment writes.

Independent (emulator, oracle, plan) cells may train in parallel threads;
results are collected and written in sorted order, so --jobs does not
affect any output byte. A cell that fails with a training divergence is
recorded and skipped; the remaining cells still run.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, config_to_dict
from .datasetio import (checksum_bytes, read_dataset, read_manifest,
                        write_bytes_atomic, write_dataset, write_json_atomic)
from .emulators import Emulator, emulator_from_dict, emulator_to_dict, train
from .errors import (DivergenceError, IncompleteRecordsError, MissingFileError)
from .evaluation import (DEFAULT_FLAG_THRESHOLD, EvalRecord, ResultsTable,
                         build_results_table, domain_risk, records_to_csv,
                         table_to_csv, table_to_markdown)
from .grid import OUTPUT_VARIABLES, lat_weights
from .rng import derive_seed
from .splits import (SplitPlan, baseline_split, read_plan, resolve_chunks,
                     rotate_ssp_splits, time_domain_split, write_plan)
from .synth import Dataset, build_dataset

log = logging.getLogger("climashift")


def dataset_dir(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / "dataset"


def results_dir(config: ExperimentConfig) -> Path:
    return Path(config.output_dir) / "results"


def ensure_dataset(config: ExperimentConfig, regenerate: bool = False,
                   allow_generate: bool = True) -> Dataset:
    """Read the dataset from disk, generating it first if needed.

    Generated data is always read back from disk rather than kept in
    memory, so downstream results reflect the stored dtype exactly.
    """
    directory = dataset_dir(config)
    manifest_path = directory / "manifest.json"
    if manifest_path.is_file() and not regenerate:
        log.info("reading dataset from %s", directory)
        return read_dataset(directory)
    if not allow_generate and not manifest_path.is_file():
        raise MissingFileError(
            f"no dataset at {directory}; run the generate command first "
            "or pass --generate")
    log.info("generating dataset into %s", directory)
    dataset = build_dataset(config.generation, config.seed)
    write_dataset(dataset, directory, dtype=config.dtype)
    return read_dataset(directory)


def build_plans(config: ExperimentConfig, dataset: Dataset) -> list[SplitPlan]:
    """All split plans selected by the config, every oracle."""
    plans = []
    for oracle_id in dataset.oracles:
        if "baseline" in config.protocols:
            plans.append(baseline_split(dataset, oracle_id, config.seed))
        if "time_shift" in config.protocols:
            plans.append(time_domain_split(
                dataset, oracle_id, config.time_test_scenarios, config.seed,
                test_years=config.time_test_years))
        if "ssp_rotation" in config.protocols:
            plans.extend(rotate_ssp_splits(
                dataset, oracle_id, config.seed,
                include_ssp245=config.rotation_include_ssp245))
    return plans


def write_plans(plans: list[SplitPlan], directory: Path) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for plan in plans:
        name = f"{plan.oracle_id}__{plan.name}.json"
        write_plan(plan, directory / name)
        checksums[f"splits/{name}"] = checksum_bytes(
            (directory / name).read_bytes())
    return checksums


def read_plans(directory: Path) -> list[SplitPlan]:
    if not directory.is_dir():
        raise MissingFileError(f"no split plans at {directory}; run train first")
    return [read_plan(p) for p in sorted(directory.glob("*.json"))]


def cell_label(kind: str, plan: SplitPlan) -> str:
    return f"{kind}__{plan.oracle_id}__{plan.name}"


def cell_seed(config: ExperimentConfig, kind: str, plan: SplitPlan) -> int:
    return derive_seed(config.seed, "train:" + kind,
                       "oracle:" + plan.oracle_id, "plan:" + plan.name)


def train_cell(config: ExperimentConfig, dataset: Dataset, kind: str,
               plan: SplitPlan) -> tuple[Emulator, list[dict]]:
    train_config = replace(config.mlp_train, seed=cell_seed(config, kind, plan))
    return train(kind, plan, dataset, train_config,
                 hidden=config.mlp_hidden, ridge=config.ps_ridge)


def evaluate_cell(emulator: Emulator, plan: SplitPlan,
                  dataset: Dataset) -> list[EvalRecord]:
    """Per-variable test risk of one trained cell."""
    weights = lat_weights(dataset.grid)
    test_chunks = resolve_chunks(dataset, plan.test)
    records = []
    for variable in OUTPUT_VARIABLES:
        rmse = domain_risk(emulator, test_chunks, weights, [variable])
        records.append(EvalRecord(
            emulator=emulator.kind, oracle_id=plan.oracle_id,
            protocol=plan.name, variable=variable, rmse=rmse,
            n_forecasts=len(test_chunks) * 12))
    return records


@dataclass(eq=False)
class ExperimentResult:
    records: list[EvalRecord]
    failures: list[tuple[str, str]]
    table: ResultsTable | None
    results_path: Path


def _run_cells(config: ExperimentConfig, dataset: Dataset,
               plans: list[SplitPlan], jobs: int):
    """Train and evaluate every (kind, plan) cell; failures don't abort."""
    cells = [(kind, plan) for kind in config.emulators for plan in plans]

    def one(cell):
        kind, plan = cell
        label = cell_label(kind, plan)
        log.info("training %s", label)
        emulator, history = train_cell(config, dataset, kind, plan)
        return label, plan, emulator, history, evaluate_cell(emulator, plan, dataset)

    outcomes, failures = {}, []
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(one, cell): cell for cell in cells}
            for future, cell in futures.items():
                label = cell_label(cell[0], cell[1])
                try:
                    outcomes[label] = future.result()
                except DivergenceError as exc:
                    log.error("cell %s failed: %s", label, exc)
                    failures.append((label, str(exc)))
    else:
        for cell in cells:
            label = cell_label(cell[0], cell[1])
            try:
                outcomes[label] = one(cell)
            except DivergenceError as exc:
                log.error("cell %s failed: %s", label, exc)
                failures.append((label, str(exc)))
    ordered = [outcomes[label] for label in sorted(outcomes)]
    return ordered, sorted(failures)


def run_training(config: ExperimentConfig, dataset: Dataset,
                 plans: list[SplitPlan], jobs: int = 1):
    """Train/evaluate all cells and persist models; returns artifacts."""
    out = results_dir(config)
    models_dir = out / "models"
    models_dir.mkdir(parents=True, exist_ok=True)
    outcomes, failures = _run_cells(config, dataset, plans, jobs)
    checksums = {}
    records = []
    for label, plan, emulator, history, cell_records in outcomes:
        doc = emulator_to_dict(emulator, plan.name, config=replace(
            config.mlp_train, seed=cell_seed(config, emulator.kind, plan)),
            history=history)
        path = models_dir / f"{label}.json"
        write_json_atomic(path, doc)
        checksums[f"models/{label}.json"] = checksum_bytes(path.read_bytes())
        records.extend(cell_records)
    return records, failures, checksums


def run_evaluation_from_disk(config: ExperimentConfig,
                             dataset: Dataset) -> list[EvalRecord]:
    """Re-evaluate persisted models against persisted plans."""
    out = results_dir(config)
    plans = read_plans(out / "splits")
    models_dir = out / "models"
    if not models_dir.is_dir():
        raise MissingFileError(f"no models at {models_dir}; run train first")
    records = []
    for plan in plans:
        for kind in config.emulators:
            path = models_dir / f"{cell_label(kind, plan)}.json"
            if not path.is_file():
                log.warning("no model file %s; skipping", path)
                continue
            emulator = emulator_from_dict(json.loads(path.read_text()))
            records.extend(evaluate_cell(emulator, plan, dataset))
    if not records:
        raise MissingFileError(f"no evaluable models under {models_dir}")
    return records


def write_records(records: list[EvalRecord], out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    data = records_to_csv(records).encode()
    write_bytes_atomic(out / "records.csv", data)
    return {"records.csv": checksum_bytes(data)}


def write_tables(table: ResultsTable, out: Path,
                 threshold: float | None = DEFAULT_FLAG_THRESHOLD) -> dict:
    csv_data = table_to_csv(table).encode()
    md_data = table_to_markdown(table, threshold=threshold).encode()
    write_bytes_atomic(out / "table.csv", csv_data)
    write_bytes_atomic(out / "table.md", md_data)
    return {"table.csv": checksum_bytes(csv_data),
            "table.md": checksum_bytes(md_data)}


def run_experiment(config: ExperimentConfig, jobs: int = 1,
                   regenerate: bool = False,
                   allow_generate: bool = True) -> ExperimentResult:
    """The full pipeline; see the module docstring for the stage list."""
    out = results_dir(config)
    out.mkdir(parents=True, exist_ok=True)
    stages = {}
    artifacts = {}

    t0 = time.perf_counter()
    dataset = ensure_dataset(config, regenerate=regenerate,
                             allow_generate=allow_generate)
    stages["generate"] = {"seconds": time.perf_counter() - t0}

    t0 = time.perf_counter()
    plans = build_plans(config, dataset)
    artifacts.update(write_plans(plans, out / "splits"))
    stages["split"] = {"seconds": time.perf_counter() - t0}

    t0 = time.perf_counter()
    records, failures, model_checksums = run_training(config, dataset, plans,
                                                      jobs=jobs)
    artifacts.update(model_checksums)
    stages["train_eval"] = {"seconds": time.perf_counter() - t0}

    t0 = time.perf_counter()
    artifacts.update(write_records(records, out))
    table = None
    if "baseline" in config.protocols and len(config.protocols) > 1:
        try:
            table = build_results_table(records)
            artifacts.update(write_tables(table, out))
        except IncompleteRecordsError as exc:
            log.error("cannot tabulate percent changes: %s", exc)
    stages["report"] = {"seconds": time.perf_counter() - t0}

    write_json_atomic(out / "run_manifest.json", {
        "harness_version": __version__,
        "config": config_to_dict(config),
        "stages": stages,
        "artifacts": dict(sorted(artifacts.items())),
    })
    return ExperimentResult(records=records, failures=failures, table=table,
                            results_path=out)
