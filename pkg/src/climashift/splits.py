"""Train/validation/test split protocols over year chunks.

Three protocols, each built per oracle with the 1-year chunk as the
sample unit:

- baseline: pool = {historical, ssp126, ssp370, ssp585}, a seeded 10%
  of the pool held out for validation, all of ssp245 for testing.
- time shift: train on historical only, validate on a seeded 10% of it,
  test on the 2015-2023 slice of the requested scenarios.
- SSP rotation: hold out one of {ssp126, ssp370, ssp585} in turn for
  testing; by default ssp245 joins the training pool in its place, so
  every rotation trains on the same number of chunks.

Validation sampling is a partial Fisher-Yates pass over the pool sorted
by (scenario, year), with floor(0.10 * pool) draws, so identical
(dataset, seed) always yield identical plans.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .datasetio import YearChunk, write_json_atomic
from .errors import ConfigError, ContractError
from .rng import Pcg32, derive_seed
from .synth import Dataset

ROTATION_SCENARIOS = ("ssp126", "ssp370", "ssp585")
BASELINE_POOL = ("historical", "ssp126", "ssp370", "ssp585")
BASELINE_TEST = "ssp245"
DEFAULT_TIME_TEST_YEARS = (2015, 2023)
VAL_FRACTION_DENOM = 10  # |val| = |pool| // 10


class ChunkKey(NamedTuple):
    """Identifies one YearChunk; tuple order gives the sort order."""

    oracle_id: str
    scenario: str
    year: int


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """One protocol instance for one oracle."""

    name: str
    oracle_id: str
    train: frozenset
    val: frozenset
    test: frozenset
    domains_all: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", frozenset(self.train))
        object.__setattr__(self, "val", frozenset(self.val))
        object.__setattr__(self, "test", frozenset(self.test))
        object.__setattr__(self, "domains_all", tuple(self.domains_all))
        if not self.name:
            raise ContractError("plan name must be non-empty")
        if not self.test:
            raise ContractError("test set must be non-empty")
        if (self.train & self.val) or (self.train & self.test) or (self.val & self.test):
            raise ContractError("train/val/test must be pairwise disjoint")
        for key in (*self.train, *self.val, *self.test):
            if key.oracle_id != self.oracle_id:
                raise ContractError(
                    f"chunk {key} does not belong to oracle {self.oracle_id}")


def chunk_universe(dataset: Dataset, oracle_id: str,
                   scenarios: Iterable[str] | None = None) -> list[ChunkKey]:
    """All chunk keys of one oracle, sorted by (scenario, year)."""
    if oracle_id not in dataset.oracles:
        raise ConfigError(f"dataset has no oracle {oracle_id!r}")
    if scenarios is None:
        scenarios = dataset.scenarios
    keys = []
    for sid in sorted(scenarios):
        if sid not in dataset.scenarios:
            raise ConfigError(f"dataset has no scenario {sid!r}")
        y0, y1 = dataset.scenarios[sid]
        keys.extend(ChunkKey(oracle_id, sid, y) for y in range(y0, y1 + 1))
    return keys


def _split_pool(pool: list[ChunkKey], seed: int) -> tuple[frozenset, frozenset]:
    """(train, val) with |val| = |pool| // 10, seeded sample without replacement."""
    val = frozenset(Pcg32(seed).sample(pool, len(pool) // VAL_FRACTION_DENOM))
    return frozenset(pool) - val, val


def baseline_split(dataset: Dataset, oracle_id: str, seed: int) -> SplitPlan:
    """Random 10% validation holdout; ssp245 reserved for testing."""
    for sid in (*BASELINE_POOL, BASELINE_TEST):
        if sid not in dataset.scenarios:
            raise ConfigError(f"baseline protocol needs scenario {sid!r}")
    pool = chunk_universe(dataset, oracle_id, BASELINE_POOL)
    train, val = _split_pool(
        pool, derive_seed(seed, "split:baseline", "oracle:" + oracle_id))
    test = frozenset(chunk_universe(dataset, oracle_id, (BASELINE_TEST,)))
    return SplitPlan(name="baseline", oracle_id=oracle_id, train=train, val=val,
                     test=test, domains_all=tuple(sorted((*BASELINE_POOL,
                                                          BASELINE_TEST))))


def time_domain_split(dataset: Dataset, oracle_id: str,
                      test_scenarios: Iterable[str], seed: int,
                      test_years: tuple[int, int] = DEFAULT_TIME_TEST_YEARS) -> SplitPlan:
    """Train on the historical period, test on an early future slice."""
    test_scenarios = tuple(sorted(set(test_scenarios)))
    if not test_scenarios:
        raise ConfigError("time-shift protocol needs at least one test scenario")
    if "historical" not in dataset.scenarios:
        raise ConfigError("time-shift protocol needs the historical scenario")
    ty0, ty1 = test_years
    test = []
    for sid in test_scenarios:
        if sid not in dataset.scenarios:
            raise ConfigError(f"dataset has no scenario {sid!r}")
        y0, y1 = dataset.scenarios[sid]
        if not (y0 <= ty0 <= ty1 <= y1):
            raise ConfigError(
                f"test years {test_years} outside {sid} coverage ({y0}, {y1})")
        test.extend(ChunkKey(oracle_id, sid, y) for y in range(ty0, ty1 + 1))
    pool = chunk_universe(dataset, oracle_id, ("historical",))
    train, val = _split_pool(
        pool, derive_seed(seed, "split:time_shift", "oracle:" + oracle_id))
    return SplitPlan(name="time_shift", oracle_id=oracle_id, train=train, val=val,
                     test=frozenset(test),
                     domains_all=tuple(sorted({"historical", *test_scenarios})))


def rotate_ssp_splits(dataset: Dataset, oracle_id: str, seed: int,
                      include_ssp245: bool = True) -> list[SplitPlan]:
    """One plan per held-out SSP among ssp126, ssp370, ssp585.

    With include_ssp245 (the default), ssp245 replaces the held-out SSP
    in the pool, so the three plans train on equally many chunks.
    """
    needed = set(ROTATION_SCENARIOS) | {"historical"}
    if include_ssp245:
        needed.add(BASELINE_TEST)
    for sid in sorted(needed):
        if sid not in dataset.scenarios:
            raise ConfigError(f"ssp-rotation protocol needs scenario {sid!r}")
    plans = []
    for held in ROTATION_SCENARIOS:
        pool_scenarios = needed - {held}
        name = f"{held}_holdout"
        pool = chunk_universe(dataset, oracle_id, pool_scenarios)
        train, val = _split_pool(
            pool, derive_seed(seed, "split:" + name, "oracle:" + oracle_id))
        test = frozenset(chunk_universe(dataset, oracle_id, (held,)))
        plans.append(SplitPlan(name=name, oracle_id=oracle_id, train=train,
                               val=val, test=test,
                               domains_all=tuple(sorted(needed))))
    return plans


def verify_split(plan: SplitPlan, dataset: Dataset) -> list[str]:
    """All violations of the plan laws (empty list = ok)."""
    violations = []
    for a_name, b_name in (("train", "val"), ("train", "test"), ("val", "test")):
        overlap = getattr(plan, a_name) & getattr(plan, b_name)
        for key in sorted(overlap):
            violations.append(f"{a_name}/{b_name} overlap at {key}")
    universe = set(chunk_universe(dataset, plan.oracle_id))
    for part in ("train", "val", "test"):
        for key in sorted(getattr(plan, part) - universe):
            violations.append(f"{part} chunk {key} is not in the dataset")
    if not plan.test:
        violations.append("test set is empty")
    return violations


def resolve_chunks(dataset: Dataset, keys: Iterable[ChunkKey]) -> list[YearChunk]:
    """YearChunks for the given keys, in sorted key order."""
    chunks = []
    for key in sorted(keys):
        series = dataset.series.get((key.oracle_id, key.scenario))
        if series is None:
            raise ContractError(f"dataset has no series for {key}")
        y0, y1 = series.years
        if not y0 <= key.year <= y1:
            raise ContractError(f"{key} is outside the series years ({y0}, {y1})")
        k = key.year - y0
        chunks.append(YearChunk(
            oracle_id=key.oracle_id, scenario=key.scenario, year=key.year,
            inputs=series.inputs[12 * k:12 * (k + 1)],
            outputs=series.outputs[12 * k:12 * (k + 1)]))
    return chunks


def plan_to_dict(plan: SplitPlan) -> dict:
    def part(keys):
        return [[k.scenario, k.year] for k in sorted(keys)]

    return {
        "name": plan.name,
        "oracle_id": plan.oracle_id,
        "domains_all": list(plan.domains_all),
        "train": part(plan.train),
        "val": part(plan.val),
        "test": part(plan.test),
    }


def plan_from_dict(doc: dict) -> SplitPlan:
    try:
        oid = doc["oracle_id"]

        def part(rows):
            return frozenset(ChunkKey(oid, s, int(y)) for s, y in rows)

        return SplitPlan(name=doc["name"], oracle_id=oid,
                         train=part(doc["train"]), val=part(doc["val"]),
                         test=part(doc["test"]),
                         domains_all=tuple(doc["domains_all"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractError(f"malformed split plan document: {exc}") from exc


def write_plan(plan: SplitPlan, path) -> None:
    write_json_atomic(Path(path), plan_to_dict(plan))


def read_plan(path) -> SplitPlan:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ContractError(f"split plan at {path} is not valid JSON: {exc}") from exc
    return plan_from_dict(doc)
