"""On-disk dataset format and the 1-year chunking.

Directory layout::

    manifest.json
    <oracle>/<scenario>/inputs.bin
    <oracle>/<scenario>/outputs.bin

Tensor files are raw IEEE-754 values, little-endian, row-major
[time][var][lat][lon], with no header; the manifest carries everything
needed to decode them (grid, year ranges, variable order, dtype) plus an
FNV-1a 64-bit checksum of each file's bytes. Reading verifies every
checksum before constructing anything, so a corrupt or truncated file
can never produce a partial dataset.

Writes go to a temporary name and are renamed into place, so a crash
cannot leave a half-written file under its final name. A dataset
directory must not be written by two processes at once; no locking is
provided.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import _kernels as kernels
from .errors import (ChecksumError, ContractError, DataIntegrityError,
                     MissingFileError, VersionError)
from .grid import FORCING_VARIABLES, OUTPUT_VARIABLES, GridSpec, build_grid
from .synth import Dataset, ScenarioSeries

FORMAT_VERSION = 1
_DTYPES = {"f32": "<f4", "f64": "<f8"}


def checksum_bytes(data) -> str:
    """FNV-1a 64-bit checksum as 16 hex digits."""
    return format(kernels.fnv1a64(data), "016x")


def tensor_relpath(oracle_id: str, scenario: str, kind: str) -> str:
    return f"{oracle_id}/{scenario}/{kind}.bin"


@dataclass(frozen=True, eq=False)
class DatasetManifest:
    """Self-describing index of one dataset directory."""

    format_version: int
    grid: GridSpec
    scenarios: Mapping[str, tuple[int, int]]
    oracles: tuple[str, ...]
    variables_in: tuple[str, ...]
    variables_out: tuple[str, ...]
    dtype: str
    byte_order: str
    checksums: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "scenarios", MappingProxyType(
            {s: (int(a), int(b)) for s, (a, b) in dict(self.scenarios).items()}))
        object.__setattr__(self, "oracles", tuple(self.oracles))
        object.__setattr__(self, "variables_in", tuple(self.variables_in))
        object.__setattr__(self, "variables_out", tuple(self.variables_out))
        object.__setattr__(self, "checksums", MappingProxyType(dict(self.checksums)))
        if self.format_version != FORMAT_VERSION:
            raise VersionError(
                f"unsupported format_version {self.format_version}; "
                f"this build reads version {FORMAT_VERSION}")
        if self.dtype not in _DTYPES:
            raise DataIntegrityError(f"unknown dtype {self.dtype!r}")
        if self.byte_order != "little":
            raise DataIntegrityError(f"unsupported byte order {self.byte_order!r}")
        if self.variables_in != FORCING_VARIABLES:
            raise DataIntegrityError(
                f"manifest input variables {self.variables_in} != {FORCING_VARIABLES}")
        if self.variables_out != OUTPUT_VARIABLES:
            raise DataIntegrityError(
                f"manifest output variables {self.variables_out} != {OUTPUT_VARIABLES}")
        want = {tensor_relpath(o, s, k) for o in self.oracles
                for s in self.scenarios for k in ("inputs", "outputs")}
        if set(self.checksums) != want:
            raise DataIntegrityError(
                "manifest checksums must cover every (oracle, scenario, "
                "inputs/outputs) tensor exactly")

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "grid": {"n_lat": self.grid.n_lat, "n_lon": self.grid.n_lon},
            "scenarios": {s: list(r) for s, r in sorted(self.scenarios.items())},
            "oracles": sorted(self.oracles),
            "variables_in": list(self.variables_in),
            "variables_out": list(self.variables_out),
            "dtype": self.dtype,
            "byte_order": self.byte_order,
            "checksums": dict(sorted(self.checksums.items())),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DatasetManifest":
        try:
            version = int(doc["format_version"])
        except (KeyError, TypeError, ValueError):
            raise DataIntegrityError("manifest lacks an integer format_version")
        if version != FORMAT_VERSION:
            raise VersionError(
                f"unsupported format_version {version}; "
                f"this build reads version {FORMAT_VERSION}")
        try:
            grid = build_grid(int(doc["grid"]["n_lat"]), int(doc["grid"]["n_lon"]))
            return cls(
                format_version=version,
                grid=grid,
                scenarios={s: (int(a), int(b))
                           for s, (a, b) in doc["scenarios"].items()},
                oracles=tuple(doc["oracles"]),
                variables_in=tuple(doc["variables_in"]),
                variables_out=tuple(doc["variables_out"]),
                dtype=doc["dtype"],
                byte_order=doc["byte_order"],
                checksums={str(k): str(v) for k, v in doc["checksums"].items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataIntegrityError(f"malformed manifest: {exc}") from exc


def write_bytes_atomic(path: Path, data: bytes) -> None:
    """Write via a temp name and rename, so no partial file keeps the name."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_json_atomic(path: Path, doc) -> None:
    write_bytes_atomic(path, (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode())


def write_dataset(dataset: Dataset, directory, dtype: str = "f64") -> DatasetManifest:
    """Persist a dataset; returns the manifest that was written.

    Tensors are cast to the requested dtype on the way out; "f32" halves
    the footprint at the cost of rounding.
    """
    if dtype not in _DTYPES:
        raise ContractError(f"dtype must be one of {sorted(_DTYPES)}, got {dtype!r}")
    directory = Path(directory)
    np_dtype = np.dtype(_DTYPES[dtype])
    checksums = {}
    for (oid, sid), series in sorted(dataset.series.items()):
        subdir = directory / oid / sid
        subdir.mkdir(parents=True, exist_ok=True)
        for kind, tensor in (("inputs", series.inputs), ("outputs", series.outputs)):
            data = np.ascontiguousarray(tensor, dtype=np_dtype).tobytes()
            relpath = tensor_relpath(oid, sid, kind)
            checksums[relpath] = checksum_bytes(data)
            write_bytes_atomic(directory / relpath, data)
    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        grid=dataset.grid,
        scenarios=dataset.scenarios,
        oracles=dataset.oracles,
        variables_in=FORCING_VARIABLES,
        variables_out=OUTPUT_VARIABLES,
        dtype=dtype,
        byte_order="little",
        checksums=checksums,
    )
    write_json_atomic(directory / "manifest.json", manifest.to_dict())
    return manifest


def read_manifest(directory) -> DatasetManifest:
    path = Path(directory) / "manifest.json"
    if not path.is_file():
        raise MissingFileError(f"no manifest at {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataIntegrityError(f"manifest at {path} is not valid JSON: {exc}") from exc
    return DatasetManifest.from_dict(doc)


def read_dataset(directory) -> Dataset:
    """Load a dataset directory, verifying every checksum first."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    blobs = {}
    for relpath in sorted(manifest.checksums):
        path = directory / relpath
        if not path.is_file():
            raise MissingFileError(f"tensor file missing: {path}")
        data = path.read_bytes()
        got = checksum_bytes(data)
        if got != manifest.checksums[relpath]:
            raise ChecksumError(
                f"checksum mismatch for {relpath}: "
                f"manifest {manifest.checksums[relpath]}, file {got}")
        blobs[relpath] = data

    np_dtype = np.dtype(_DTYPES[manifest.dtype])
    n_lat, n_lon = manifest.grid.shape
    series = {}
    for oid in manifest.oracles:
        for sid, (y0, y1) in manifest.scenarios.items():
            months = 12 * (y1 - y0 + 1)
            tensors = {}
            for kind, n_var in (("inputs", len(FORCING_VARIABLES)),
                                ("outputs", len(OUTPUT_VARIABLES))):
                relpath = tensor_relpath(oid, sid, kind)
                shape = (months, n_var, n_lat, n_lon)
                expected = int(np.prod(shape)) * np_dtype.itemsize
                if len(blobs[relpath]) != expected:
                    raise DataIntegrityError(
                        f"{relpath} holds {len(blobs[relpath])} bytes, "
                        f"expected {expected} for shape {shape}")
                arr = np.frombuffer(blobs[relpath], dtype=np_dtype).reshape(shape)
                tensors[kind] = arr.astype(np.float64) if manifest.dtype == "f32" else arr
            series[(oid, sid)] = ScenarioSeries(
                oracle_id=oid, scenario=sid, years=(y0, y1),
                inputs=tensors["inputs"], outputs=tensors["outputs"])
    return Dataset(grid=manifest.grid, scenarios=manifest.scenarios,
                   oracles=manifest.oracles, series=series)


@dataclass(frozen=True, eq=False)
class YearChunk:
    """Twelve consecutive months of one series: the sample unit."""

    oracle_id: str
    scenario: str
    year: int
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[0] != 12 or self.outputs.shape[0] != 12:
            raise ContractError("a chunk covers exactly 12 months")
        if self.inputs.shape[1] != len(FORCING_VARIABLES):
            raise ContractError(f"chunk inputs need {len(FORCING_VARIABLES)} channels")
        if self.outputs.shape[1] != len(OUTPUT_VARIABLES):
            raise ContractError(f"chunk outputs need {len(OUTPUT_VARIABLES)} channels")
        if self.inputs.shape[2:] != self.outputs.shape[2:]:
            raise ContractError("chunk inputs and outputs must share one grid")


def chunk_years(series) -> list[YearChunk]:
    """Split a series into chronological 1-year chunks (array views)."""
    months = series.inputs.shape[0]
    if months % 12 != 0:
        raise ContractError(f"series has {months} months, not a whole year count")
    y0, y1 = series.years
    n_years = y1 - y0 + 1
    if months != 12 * n_years:
        raise ContractError(
            f"series spans {n_years} years but holds {months // 12} of data")
    return [
        YearChunk(oracle_id=series.oracle_id, scenario=series.scenario,
                  year=y0 + k,
                  inputs=series.inputs[12 * k:12 * (k + 1)],
                  outputs=series.outputs[12 * k:12 * (k + 1)])
        for k in range(n_years)
    ]
