"""Spatial raster, cosine-latitude weights, and weighted error metrics.

The grid is a uniform cell-centered latitude/longitude raster. Rows are
weighted by normalized cosine of latitude so that errors near the poles,
where cells cover less area, count proportionally less. The weighted MSE
doubles as the training loss; the weighted RMSE (sqrt over space first,
then mean over forecasts) is the reported evaluation metric.

All functions are pure and all types immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as kernels
from .errors import ContractError

FORCING_VARIABLES = ("CO2", "CH4", "BC", "SO2")
OUTPUT_VARIABLES = ("TAS", "PR")
VARIABLE_UNITS = {
    "CO2": "norm",
    "CH4": "norm",
    "BC": "norm",
    "SO2": "norm",
    "TAS": "K",
    "PR": "mm/day",
}


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Uniform cell-centered lat-lon raster."""

    n_lat: int
    n_lon: int
    lat_deg: np.ndarray
    lon_deg: np.ndarray

    def __post_init__(self):
        if self.n_lat < 1 or self.n_lon < 1:
            raise ContractError(
                f"grid needs n_lat >= 1 and n_lon >= 1, got ({self.n_lat}, {self.n_lon})")
        lat = _frozen_array(self.lat_deg)
        lon = _frozen_array(self.lon_deg)
        object.__setattr__(self, "lat_deg", lat)
        object.__setattr__(self, "lon_deg", lon)
        if lat.shape != (self.n_lat,) or lon.shape != (self.n_lon,):
            raise ContractError("lat_deg/lon_deg lengths must match n_lat/n_lon")
        if np.any(lat <= -90.0) or np.any(lat >= 90.0):
            raise ContractError("latitudes must lie strictly inside (-90, 90)")
        if np.any(np.diff(lat) <= 0.0):
            raise ContractError("latitudes must be strictly increasing")
        expect_lat = -90.0 + (np.arange(self.n_lat) + 0.5) * 180.0 / self.n_lat
        expect_lon = (np.arange(self.n_lon) + 0.5) * 360.0 / self.n_lon
        if not (np.allclose(lat, expect_lat, atol=1e-9)
                and np.allclose(lon, expect_lon, atol=1e-9)):
            raise ContractError("grid points must be uniform cell centers")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_lat, self.n_lon)

    @property
    def n_cells(self) -> int:
        return self.n_lat * self.n_lon

    def matches(self, other: "GridSpec") -> bool:
        """Same raster: cell centers are fully determined by the counts."""
        return (self.n_lat, self.n_lon) == (other.n_lat, other.n_lon)


def build_grid(n_lat: int, n_lon: int) -> GridSpec:
    """Uniform cell-centered grid: ``lat_i = -90 + (i + 0.5) * 180 / n_lat``."""
    if n_lat < 1 or n_lon < 1:
        raise ContractError(
            f"build_grid needs positive counts, got ({n_lat}, {n_lon})")
    lat = -90.0 + (np.arange(n_lat) + 0.5) * 180.0 / n_lat
    lon = (np.arange(n_lon) + 0.5) * 360.0 / n_lon
    return GridSpec(n_lat=n_lat, n_lon=n_lon, lat_deg=lat, lon_deg=lon)


@dataclass(frozen=True, eq=False)
class LatWeights:
    """Per-row weights ``w_i = cos(lat_i) / mean_j cos(lat_j)``; mean(w) = 1."""

    w: np.ndarray

    def __post_init__(self):
        w = _frozen_array(self.w)
        object.__setattr__(self, "w", w)
        if w.ndim != 1 or w.size == 0:
            raise ContractError("weights must be a non-empty 1-d array")
        if np.any(w <= 0.0):
            raise ContractError("weights must be strictly positive")
        if abs(w.mean() - 1.0) > 1e-12:
            raise ContractError("weights must average to 1")

    @property
    def n_lat(self) -> int:
        return self.w.size


def weights_from_latitudes(lat_deg) -> LatWeights:
    """``w_i = cos(lat_i) / mean_j cos(lat_j)`` for any latitude list."""
    lat = np.asarray(lat_deg, dtype=np.float64)
    cos = np.cos(np.deg2rad(lat))
    return LatWeights(w=cos / cos.mean())


def lat_weights(grid: GridSpec) -> LatWeights:
    return weights_from_latitudes(grid.lat_deg)


@dataclass(frozen=True, eq=False)
class Field:
    """One spatial field of a named variable on a grid."""

    grid: GridSpec
    values: np.ndarray
    variable: str

    def __post_init__(self):
        values = _frozen_array(self.values)
        object.__setattr__(self, "values", values)
        if not self.variable:
            raise ContractError("field variable name must be non-empty")
        if values.shape != self.grid.shape:
            raise ContractError(
                f"field shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ContractError("field values must all be finite")
        if self.variable == "PR" and np.any(values < 0.0):
            raise ContractError("PR fields must be non-negative")

    @property
    def units(self) -> str:
        return VARIABLE_UNITS.get(self.variable, "")


def _forecast_stack(pred, truth, weights: LatWeights):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ContractError(
            f"prediction shape {pred.shape} does not match truth {truth.shape}")
    if pred.ndim < 2:
        raise ContractError("fields need at least (n_lat, n_lon) dimensions")
    n_lat, n_lon = pred.shape[-2], pred.shape[-1]
    if n_lat != weights.n_lat:
        raise ContractError(
            f"weights cover {weights.n_lat} rows but fields have {n_lat}")
    flat_pred = np.ascontiguousarray(pred.reshape(-1, n_lat, n_lon))
    flat_truth = np.ascontiguousarray(truth.reshape(-1, n_lat, n_lon))
    if flat_pred.shape[0] == 0:
        raise ContractError("empty forecast set")
    return flat_pred, flat_truth


def weighted_mse(pred, truth, weights: LatWeights) -> float:
    """Latitude-weighted mean squared error.

    ``(1/(n_lat*n_lon)) * sum_ij w_i * (pred_ij - truth_ij)**2``, averaged
    over all leading (batch/time/variable) axes.
    """
    flat_pred, flat_truth = _forecast_stack(pred, truth, weights)
    per = kernels.weighted_sqerr(flat_pred, flat_truth, weights.w)
    return float(per.mean())


def weighted_rmse(pred, truth, weights: LatWeights) -> float:
    """Mean over forecasts of the square root of the weighted spatial MSE.

    Each leading index (sample, month, variable) is one forecast; the sqrt
    is taken per forecast, then the square roots are averaged.
    """
    flat_pred, flat_truth = _forecast_stack(pred, truth, weights)
    per = kernels.weighted_sqerr(flat_pred, flat_truth, weights.w)
    return float(np.sqrt(per).mean())


def weighted_spatial_mean(values, weights: LatWeights):
    """Area-weighted mean over the trailing (n_lat, n_lon) axes."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim < 2 or values.shape[-2] != weights.n_lat:
        raise ContractError("values must end in (n_lat, n_lon) axes matching weights")
    n_lat, n_lon = values.shape[-2], values.shape[-1]
    out = np.einsum("...ij,i->...", values, weights.w) / (n_lat * n_lon)
    return float(out) if out.ndim == 0 else out
