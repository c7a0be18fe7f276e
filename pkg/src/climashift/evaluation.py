"""Risk metrics, percent-change records, and the results table.

A forecast is one (chunk, month, variable) spatial field. The risk of an
emulator on a domain is the mean over that domain's forecasts of the
latitude-weighted spatial RMSE, so reported risks and the headline metric
coincide. Percent change is 100 * (shift - base) / base: negative values
mean the shifted protocol scored better than baseline.

The results table has one percent-change cell per (emulator, variable)
row and (oracle, shift protocol) column, plus an explicitly labeled
cross-oracle mean column per protocol. Every cell is reproducible from
its two referenced records.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datasetio import YearChunk
from .emulators import Emulator, stack_chunks
from .errors import ContractError, IncompleteRecordsError
from .grid import OUTPUT_VARIABLES, LatWeights, weighted_rmse

BASELINE_PROTOCOL = "baseline"
SHIFT_PROTOCOLS = ("time_shift", "ssp126_holdout", "ssp370_holdout",
                   "ssp585_holdout")
MEAN_ORACLE_LABEL = "mean(oracles)"

# Reporting-only default: percent changes above this are flagged in tables.
DEFAULT_FLAG_THRESHOLD = 20.0


@dataclass(frozen=True)
class EvalRecord:
    """One emulator's weighted RMSE on one protocol's test domain."""

    emulator: str
    oracle_id: str
    protocol: str
    variable: str
    rmse: float
    n_forecasts: int

    def __post_init__(self):
        if self.variable not in OUTPUT_VARIABLES:
            raise ContractError(f"unknown output variable {self.variable!r}")
        if not (math.isfinite(self.rmse) and self.rmse >= 0.0):
            raise ContractError(f"rmse must be finite and >= 0, got {self.rmse}")
        if self.n_forecasts < 1:
            raise ContractError("n_forecasts must be >= 1")


def domain_risk(emulator: Emulator, domain_chunks: Sequence[YearChunk],
                weights: LatWeights,
                variables: Sequence[str] = OUTPUT_VARIABLES) -> float:
    """Mean weighted spatial RMSE over one domain's forecasts."""
    if not domain_chunks:
        raise ContractError("domain must contain at least one chunk")
    if not variables:
        raise ContractError("need at least one variable")
    idx = [OUTPUT_VARIABLES.index(v) for v in variables]
    inputs, outputs = stack_chunks(domain_chunks)
    preds = emulator.predict_many(inputs)
    return weighted_rmse(preds[:, :, idx], outputs[:, :, idx], weights)


def worst_case_risk(emulator: Emulator,
                    domains: Mapping[str, Sequence[YearChunk]],
                    weights: LatWeights,
                    variables: Sequence[str] = OUTPUT_VARIABLES) -> tuple[float, str]:
    """(max domain risk, argmax label); ties go to the smallest label."""
    if not domains:
        raise ContractError("need at least one domain")
    best_risk, best_label = -math.inf, None
    for label in sorted(domains):
        risk = domain_risk(emulator, domains[label], weights, variables)
        if risk > best_risk:
            best_risk, best_label = risk, label
    return best_risk, best_label


def percent_change(rmse_base: float, rmse_shift: float) -> float:
    """100 * (shift - base) / base; negative means improvement."""
    if not rmse_base > 0.0:
        raise ContractError(f"baseline rmse must be > 0, got {rmse_base}")
    return 100.0 * (rmse_shift - rmse_base) / rmse_base


@dataclass(frozen=True, eq=False)
class ResultsTable:
    """Percent-change cells plus the records each cell came from."""

    emulators: tuple[str, ...]
    variables: tuple[str, ...]
    oracles: tuple[str, ...]
    protocols: tuple[str, ...]
    cells: Mapping[tuple[str, str, str, str], float]
    provenance: Mapping[tuple[str, str, str, str], tuple[EvalRecord, EvalRecord]]

    def __post_init__(self):
        object.__setattr__(self, "cells", MappingProxyType(dict(self.cells)))
        object.__setattr__(self, "provenance",
                           MappingProxyType(dict(self.provenance)))

    def cell(self, emulator: str, variable: str, oracle: str, protocol: str) -> float:
        return self.cells[(emulator, variable, oracle, protocol)]

    def mean_cell(self, emulator: str, variable: str, protocol: str) -> float:
        """Cross-oracle mean of one row's cells for one protocol."""
        vals = [self.cells[(emulator, variable, o, protocol)] for o in self.oracles]
        return float(np.mean(vals))


def _protocol_order(protocols: Iterable[str]) -> tuple[str, ...]:
    known = [p for p in SHIFT_PROTOCOLS if p in protocols]
    extra = sorted(set(protocols) - set(SHIFT_PROTOCOLS))
    return tuple(known + extra)


def build_results_table(records: Sequence[EvalRecord]) -> ResultsTable:
    """Pair every shift record with its baseline and take percent changes.

    Requires exactly one baseline record and one record per shift
    protocol for each (emulator, oracle, variable) present.
    """
    by_key = {}
    for rec in records:
        key = (rec.emulator, rec.oracle_id, rec.protocol, rec.variable)
        if key in by_key:
            raise ContractError(f"duplicate record for {key}")
        by_key[key] = rec

    emulators = tuple(sorted({r.emulator for r in records}))
    oracles = tuple(sorted({r.oracle_id for r in records}))
    variables = tuple(v for v in OUTPUT_VARIABLES
                      if any(r.variable == v for r in records))
    protocols = _protocol_order({r.protocol for r in records
                                 if r.protocol != BASELINE_PROTOCOL})
    if not protocols:
        raise IncompleteRecordsError("no shift-protocol records to tabulate")

    cells, provenance = {}, {}
    for emu in emulators:
        for var in variables:
            for oracle in oracles:
                base = by_key.get((emu, oracle, BASELINE_PROTOCOL, var))
                if base is None:
                    raise IncompleteRecordsError(
                        f"missing baseline record for emulator={emu} "
                        f"oracle={oracle} variable={var}")
                for proto in protocols:
                    shift = by_key.get((emu, oracle, proto, var))
                    if shift is None:
                        raise IncompleteRecordsError(
                            f"missing {proto} record for emulator={emu} "
                            f"oracle={oracle} variable={var}")
                    key = (emu, var, oracle, proto)
                    cells[key] = percent_change(base.rmse, shift.rmse)
                    provenance[key] = (base, shift)
    return ResultsTable(emulators=emulators, variables=variables,
                        oracles=oracles, protocols=protocols,
                        cells=cells, provenance=provenance)


# ---------------------------------------------------------------------------
# Serialization. CSV floats use repr so identical inputs give identical
# bytes and values round-trip exactly.

RECORD_FIELDS = ("emulator", "oracle_id", "protocol", "variable",
                 "rmse", "n_forecasts")


def records_to_csv(records: Sequence[EvalRecord]) -> str:
    out = io.StringIO()
    out.write(",".join(RECORD_FIELDS) + "\n")
    for rec in sorted(records, key=lambda r: (r.emulator, r.oracle_id,
                                              r.protocol, r.variable)):
        out.write(f"{rec.emulator},{rec.oracle_id},{rec.protocol},"
                  f"{rec.variable},{rec.rmse!r},{rec.n_forecasts}\n")
    return out.getvalue()


def records_from_csv(text: str) -> list[EvalRecord]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(RECORD_FIELDS):
        raise IncompleteRecordsError("records CSV lacks the expected header")
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(RECORD_FIELDS):
            raise IncompleteRecordsError(f"malformed records CSV line: {ln!r}")
        try:
            records.append(EvalRecord(
                emulator=parts[0], oracle_id=parts[1], protocol=parts[2],
                variable=parts[3], rmse=float(parts[4]),
                n_forecasts=int(parts[5])))
        except (ValueError, ContractError) as exc:
            raise IncompleteRecordsError(
                f"malformed records CSV line: {ln!r} ({exc})") from exc
    if not records:
        raise IncompleteRecordsError("records CSV holds no records")
    return records


def _columns(table: ResultsTable) -> list[tuple[str, str]]:
    cols = [(o, p) for o in table.oracles for p in table.protocols]
    cols.extend((MEAN_ORACLE_LABEL, p) for p in table.protocols)
    return cols


def _column_value(table: ResultsTable, emu: str, var: str,
                  oracle: str, proto: str) -> float:
    if oracle == MEAN_ORACLE_LABEL:
        return table.mean_cell(emu, var, proto)
    return table.cell(emu, var, oracle, proto)


def table_to_csv(table: ResultsTable) -> str:
    cols = _columns(table)
    out = io.StringIO()
    out.write("emulator,variable," + ",".join(f"{o}:{p}" for o, p in cols) + "\n")
    for emu in table.emulators:
        for var in table.variables:
            vals = [repr(_column_value(table, emu, var, o, p)) for o, p in cols]
            out.write(f"{emu},{var}," + ",".join(vals) + "\n")
    return out.getvalue()


def table_to_markdown(table: ResultsTable, threshold: float | None = None) -> str:
    """Pipe table of percent changes, optionally flagging cells > threshold."""
    cols = _columns(table)
    header = ["emulator", "variable"] + [f"{o} {p}" for o, p in cols]
    rows = []
    for emu in table.emulators:
        for var in table.variables:
            row = [emu, var]
            for o, p in cols:
                val = _column_value(table, emu, var, o, p)
                mark = " **!**" if threshold is not None and val > threshold else ""
                row.append(f"{val:+.2f}%{mark}")
            rows.append(row)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows))
              for i in range(len(header))]
    lines = [
        "| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |",
        "|" + "|".join("-" * (w + 2) for w in widths) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
    return "\n".join(lines) + "\n"


def table_to_text(table: ResultsTable, threshold: float | None = None) -> str:
    """Aligned plain-text rendering for terminal output."""
    cols = _columns(table)
    header = ["emulator", "variable"] + [f"{o}:{p}" for o, p in cols]
    rows = []
    for emu in table.emulators:
        for var in table.variables:
            row = [emu, var]
            for o, p in cols:
                val = _column_value(table, emu, var, o, p)
                mark = " !" if threshold is not None and val > threshold else ""
                row.append(f"{val:+.2f}%{mark}")
            rows.append(row)
    widths = [max(len(header[i]), *(len(r[i]) for r in rows))
              for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
