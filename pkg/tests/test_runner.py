"""Experiment orchestration: staging, artifacts, determinism, failures."""

import dataclasses
import json

import numpy as np
import pytest

from climashift.datasetio import checksum_bytes, read_manifest
from climashift.emulators import TrainConfig
from climashift.errors import ChecksumError, MissingFileError
from climashift.evaluation import build_results_table, records_from_csv
from climashift.runner import (build_plans, cell_label, cell_seed,
                               dataset_dir, ensure_dataset, read_plans,
                               results_dir, run_evaluation_from_disk,
                               run_experiment, write_plans)

from conftest import tiny_config


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    """One complete tiny experiment, reused by the read-only assertions."""
    config = tiny_config(tmp_path_factory.mktemp("exp"))
    result = run_experiment(config)
    return config, result


class TestEnsureDataset:
    def test_generates_then_reads_back(self, tmp_path):
        config = tiny_config(tmp_path)
        dataset = ensure_dataset(config)
        manifest_path = dataset_dir(config) / "manifest.json"
        assert manifest_path.is_file()
        stamp = manifest_path.stat().st_mtime_ns
        again = ensure_dataset(config)  # second call must only read
        assert manifest_path.stat().st_mtime_ns == stamp
        key = ("cm01", "ssp245")
        assert (again.series[key].outputs == dataset.series[key].outputs).all()

    def test_memory_reflects_stored_dtype(self, tmp_path):
        config = tiny_config(tmp_path, dtype="f32")
        dataset = ensure_dataset(config)
        arr = dataset.series[("cm01", "ssp245")].outputs
        assert (arr == arr.astype(np.float32)).all()

    def test_missing_without_generation_permission(self, tmp_path):
        config = tiny_config(tmp_path)
        with pytest.raises(MissingFileError):
            ensure_dataset(config, allow_generate=False)

    def test_regenerate_heals_corruption(self, tmp_path):
        config = tiny_config(tmp_path)
        ensure_dataset(config)
        manifest = read_manifest(dataset_dir(config))
        victim = dataset_dir(config) / sorted(manifest.checksums)[0]
        data = bytearray(victim.read_bytes())
        data[0] ^= 0xFF
        victim.write_bytes(bytes(data))
        with pytest.raises(ChecksumError):
            ensure_dataset(config)
        ensure_dataset(config, regenerate=True)
        ensure_dataset(config)  # clean again


class TestPlanStaging:
    def test_protocol_selection(self, tmp_path, tiny_dataset):
        full = tiny_config(tmp_path)
        assert len(build_plans(full, tiny_dataset)) == 2 * (1 + 1 + 3)
        only_base = tiny_config(tmp_path, protocols=("baseline",))
        plans = build_plans(only_base, tiny_dataset)
        assert [p.name for p in plans] == ["baseline", "baseline"]
        assert [p.oracle_id for p in plans] == ["cm01", "cm02"]

    def test_write_read_round_trip(self, tmp_path, tiny_dataset):
        config = tiny_config(tmp_path)
        plans = build_plans(config, tiny_dataset)
        checksums = write_plans(plans, tmp_path / "splits")
        assert len(checksums) == len(plans)
        again = read_plans(tmp_path / "splits")
        assert {(p.oracle_id, p.name) for p in again} == \
            {(p.oracle_id, p.name) for p in plans}
        for a in again:
            match = next(p for p in plans
                         if (p.oracle_id, p.name) == (a.oracle_id, a.name))
            assert a.train == match.train and a.test == match.test

    def test_read_plans_missing_dir(self, tmp_path):
        with pytest.raises(MissingFileError):
            read_plans(tmp_path / "absent")


class TestCellIdentity:
    def test_labels_and_seeds_are_distinct(self, tmp_path, tiny_dataset):
        config = tiny_config(tmp_path)
        plans = build_plans(config, tiny_dataset)
        labels = [cell_label(kind, plan)
                  for kind in config.emulators for plan in plans]
        seeds = [cell_seed(config, kind, plan)
                 for kind in config.emulators for plan in plans]
        assert len(set(labels)) == len(labels) == 30
        assert len(set(seeds)) == len(seeds)

    def test_cell_seed_follows_root_seed(self, tmp_path, tiny_dataset):
        a = tiny_config(tmp_path)
        b = dataclasses.replace(a, seed=1)
        plan = build_plans(a, tiny_dataset)[0]
        assert cell_seed(a, "mlp", plan) == cell_seed(a, "mlp", plan)
        assert cell_seed(a, "mlp", plan) != cell_seed(b, "mlp", plan)


class TestRunExperiment:
    def test_record_inventory(self, finished_run):
        config, result = finished_run
        # 3 emulators x (2 oracles x 5 plans) x 2 variables
        assert len(result.records) == 60
        assert result.failures == []
        keys = {(r.emulator, r.oracle_id, r.protocol, r.variable)
                for r in result.records}
        assert len(keys) == 60

    def test_artifact_tree(self, finished_run):
        config, result = finished_run
        out = results_dir(config)
        assert (out / "records.csv").is_file()
        assert (out / "table.csv").is_file()
        assert (out / "table.md").is_file()
        assert len(list((out / "splits").glob("*.json"))) == 10
        assert len(list((out / "models").glob("*.json"))) == 30

    def test_manifest_checksums_verify(self, finished_run):
        config, result = finished_run
        out = results_dir(config)
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert set(manifest) == {"harness_version", "config", "stages",
                                 "artifacts"}
        assert set(manifest["stages"]) == {"generate", "split", "train_eval",
                                           "report"}
        assert manifest["config"]["seed"] == config.seed
        for relpath, digest in manifest["artifacts"].items():
            assert checksum_bytes((out / relpath).read_bytes()) == digest

    def test_records_csv_matches_result(self, finished_run):
        config, result = finished_run
        text = (results_dir(config) / "records.csv").read_text()
        loaded = records_from_csv(text)
        assert sorted((r.emulator, r.oracle_id, r.protocol, r.variable,
                       r.rmse) for r in loaded) == \
            sorted((r.emulator, r.oracle_id, r.protocol, r.variable,
                    r.rmse) for r in result.records)

    def test_table_matches_records(self, finished_run):
        config, result = finished_run
        rebuilt = build_results_table(result.records)
        assert rebuilt.cells == result.table.cells

    def test_eval_from_disk_reproduces_records(self, finished_run):
        config, result = finished_run
        dataset = ensure_dataset(config, allow_generate=False)
        records = run_evaluation_from_disk(config, dataset)
        assert sorted((r.emulator, r.oracle_id, r.protocol, r.variable,
                       r.rmse) for r in records) == \
            sorted((r.emulator, r.oracle_id, r.protocol, r.variable,
                    r.rmse) for r in result.records)


class TestDeterminism:
    def test_reruns_and_thread_counts_agree_bytewise(self, finished_run,
                                                     tmp_path):
        config, _ = finished_run
        repeat = dataclasses.replace(config, output_dir=str(tmp_path / "b"))
        run_experiment(repeat, jobs=3)
        first = (results_dir(config) / "records.csv").read_bytes()
        second = (results_dir(repeat) / "records.csv").read_bytes()
        assert first == second
        assert (results_dir(config) / "table.csv").read_bytes() == \
            (results_dir(repeat) / "table.csv").read_bytes()

    def test_seed_changes_results(self, finished_run, tmp_path):
        config, _ = finished_run
        other = dataclasses.replace(config, seed=1,
                                    output_dir=str(tmp_path / "c"))
        run_experiment(other)
        assert (results_dir(config) / "records.csv").read_bytes() != \
            (results_dir(other) / "records.csv").read_bytes()


class TestFailureHandling:
    @pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
    @pytest.mark.filterwarnings("ignore:invalid value:RuntimeWarning")
    def test_divergent_cells_are_reported_not_fatal(self, tmp_path):
        base = tiny_config(tmp_path)
        config = dataclasses.replace(
            base, mlp_train=dataclasses.replace(
                base.mlp_train, optimizer="sgd", lr_init=1e9, decay_gamma=1.0,
                epochs=30))
        result = run_experiment(config)
        labels = [label for label, _ in result.failures]
        assert len(labels) == 10  # every mlp cell diverges
        assert all(label.startswith("mlp__") for label in labels)
        # closed-form cells survive and still tabulate without the mlp rows
        assert len(result.records) == 40
        assert result.table is not None
        assert result.table.emulators == ("climatology", "pattern_scaling")
        text = (results_dir(config) / "records.csv").read_text()
        assert "mlp" not in text
        assert "mlp" not in (results_dir(config) / "table.csv").read_text()

    def test_partial_emulator_failure_skips_table(self, tmp_path, monkeypatch):
        # one diverging shift cell leaves its emulator unpairable: records
        # are still written but no percent-change table can be built
        import climashift.runner as runner_module
        from climashift.errors import DivergenceError
        real = runner_module.train_cell

        def flaky(config, dataset, kind, plan):
            if kind == "mlp" and plan.name == "time_shift" \
                    and plan.oracle_id == "cm01":
                raise DivergenceError("injected failure")
            return real(config, dataset, kind, plan)

        monkeypatch.setattr(runner_module, "train_cell", flaky)
        config = tiny_config(tmp_path)
        result = run_experiment(config)
        assert result.failures == [("mlp__cm01__time_shift",
                                    "injected failure")]
        assert len(result.records) == 58
        assert result.table is None
        assert (results_dir(config) / "records.csv").is_file()
        assert not (results_dir(config) / "table.csv").exists()

    def test_single_protocol_has_no_table(self, tmp_path):
        config = tiny_config(tmp_path, protocols=("baseline",))
        result = run_experiment(config)
        assert result.table is None
        assert len(result.records) == 12  # 3 kinds x 2 oracles x 2 variables
        assert not (results_dir(config) / "table.csv").exists()
