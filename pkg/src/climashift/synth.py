"""Synthetic scenario inputs and planted oracle outputs.

Five oracle configurations stand in for distinct traditional climate
models. Each maps four monthly forcing fields (CO2, CH4, BC, SO2 in
dimensionless normalized units) to TAS and PR through a fully known
process::

    TAS(t,x) = a(x) + sum_g b_g(x) F_g(t,x) + q(x) (sum_g F_g(t,x))^2
               + s_amp(x) sin(2 pi month / 12) + eps(t,x)
    PR(t,x)  = max(0, p0(x) + sum_g c_g(x) F_g(t,x) + eps'(t,x))

where eps and eps' are independent per-cell AR(1) processes. Every
parameter field is known, so downstream fits and risk numbers have
computable ground truth: the quadratic TAS term makes linear emulators
genuinely misspecified under high-forcing extrapolation, and the PR
clip at zero plants a simple regime-dependent nonlinearity.

Scenario inputs are a deterministic global ramp per (scenario, forcer)
rendered onto a fixed spatial pattern, plus a sinusoidal seasonal cycle.
Historical ramps end exactly where every SSP ramp starts, so forcing
trajectories are continuous at the 2014/2015 boundary.

All series start in January; month-of-year is ``t mod 12``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import _kernels as kernels
from .errors import ContractError
from .grid import (FORCING_VARIABLES, Field, GridSpec, LatWeights, build_grid,
                   lat_weights, weighted_spatial_mean)
from .rng import Pcg32, derive_seed

SCENARIOS = ("historical", "ssp126", "ssp245", "ssp370", "ssp585")
SSP_SCENARIOS = ("ssp126", "ssp245", "ssp370", "ssp585")

# Year coverage from the CMIP convention: 165 historical years, 86 SSP years.
DEFAULT_YEAR_RANGES = {
    "historical": (1850, 2014),
    "ssp126": (2015, 2100),
    "ssp245": (2015, 2100),
    "ssp370": (2015, 2100),
    "ssp585": (2015, 2100),
}

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RampSpec:
    """Global-mean level ramp for one (scenario, forcer)."""

    start_level: float
    end_level: float
    shape: str = "linear"
    steepness: float = 6.0
    midpoint: float = 0.5

    def __post_init__(self):
        if self.shape not in ("linear", "logistic"):
            raise ContractError(f"unknown ramp shape {self.shape!r}")
        if self.shape == "logistic" and self.steepness <= 0.0:
            raise ContractError("logistic steepness must be positive")


def ramp_value(ramp: RampSpec, tau):
    """Ramp level at normalized position ``tau`` in [0, 1].

    Linear ramps interpolate directly. Logistic ramps rescale the
    sigmoid so the endpoints hit start_level and end_level exactly.
    """
    tau = np.asarray(tau, dtype=np.float64)
    if ramp.shape == "linear":
        g = tau
    else:
        k, m = ramp.steepness, ramp.midpoint
        lo = 1.0 / (1.0 + math.exp(k * m))
        hi = 1.0 / (1.0 + math.exp(-k * (1.0 - m)))
        g = (1.0 / (1.0 + np.exp(-k * (tau - m))) - lo) / (hi - lo)
    return ramp.start_level + (ramp.end_level - ramp.start_level) * g


@dataclass(frozen=True, eq=False)
class ForcingParams:
    """Ramp table, spatial patterns, and seasonal amplitudes for all forcers.

    ``ramps[forcer][scenario]`` is a RampSpec; ``patterns[forcer]`` is a
    fixed Field normalized to area-weighted mean 1, so the weighted
    global mean of a rendered input field equals the trajectory value.
    """

    grid: GridSpec
    ramps: Mapping[str, Mapping[str, RampSpec]]
    patterns: Mapping[str, Field]
    seasonal_amplitude: Mapping[str, float]

    def __post_init__(self):
        ramps = MappingProxyType({g: MappingProxyType(dict(v))
                                  for g, v in dict(self.ramps).items()})
        object.__setattr__(self, "ramps", ramps)
        object.__setattr__(self, "patterns", MappingProxyType(dict(self.patterns)))
        object.__setattr__(self, "seasonal_amplitude",
                           MappingProxyType(dict(self.seasonal_amplitude)))
        for g in FORCING_VARIABLES:
            if g not in self.ramps or g not in self.patterns:
                raise ContractError(f"missing ramp table or pattern for {g}")
            if g not in self.seasonal_amplitude:
                raise ContractError(f"missing seasonal amplitude for {g}")
            if not self.patterns[g].grid.matches(self.grid):
                raise ContractError(f"pattern for {g} is on a different grid")
        weights = lat_weights(self.grid)
        for g, pat in self.patterns.items():
            if abs(weighted_spatial_mean(pat.values, weights) - 1.0) > 1e-9:
                raise ContractError(
                    f"pattern for {g} must have area-weighted mean 1")
        for g in ("CO2", "CH4"):
            ends = [self.ramps[g][s].end_level
                    for s in ("ssp126", "ssp245", "ssp370", "ssp585")
                    if s in self.ramps[g]]
            if any(a >= b for a, b in zip(ends, ends[1:])):
                raise ContractError(
                    f"{g} end levels must increase from ssp126 to ssp585")
        if "historical" in self.ramps["CO2"]:
            for g in FORCING_VARIABLES:
                hist_end = self.ramps[g]["historical"].end_level
                for s, ramp in self.ramps[g].items():
                    if s != "historical" and ramp.start_level != hist_end:
                        raise ContractError(
                            f"{g} {s} must start at the historical end level")


@dataclass(frozen=True, eq=False)
class OracleConfig:
    """Planted generative parameters of one synthetic climate model.

    All members named in the module docstring formula, as Fields on a
    common grid, plus the AR(1) noise level and persistence.
    """

    oracle_id: str
    a: Field
    b: Mapping[str, Field]
    q: Field
    s_amp: Field
    p0: Field
    c: Mapping[str, Field]
    noise_sigma: float
    ar_rho: float

    def __post_init__(self):
        object.__setattr__(self, "b", MappingProxyType(dict(self.b)))
        object.__setattr__(self, "c", MappingProxyType(dict(self.c)))
        if not self.oracle_id:
            raise ContractError("oracle_id must be non-empty")
        if self.noise_sigma < 0.0:
            raise ContractError("noise_sigma must be >= 0")
        if not 0.0 <= self.ar_rho < 1.0:
            raise ContractError("ar_rho must lie in [0, 1)")
        if np.any(self.p0.values < 0.0):
            raise ContractError("baseline PR must be non-negative everywhere")
        grid = self.a.grid
        if set(self.b) != set(FORCING_VARIABLES) or set(self.c) != set(FORCING_VARIABLES):
            raise ContractError("sensitivity tables must cover exactly the four forcers")
        for f in (self.a, self.q, self.s_amp, self.p0, *self.b.values(), *self.c.values()):
            if not f.grid.matches(grid):
                raise ContractError("all oracle parameter fields must share one grid")

    @property
    def grid(self) -> GridSpec:
        return self.a.grid


@dataclass(frozen=True, eq=False)
class ScenarioSeries:
    """Monthly inputs and oracle outputs for one (oracle, scenario)."""

    oracle_id: str
    scenario: str
    years: tuple[int, int]
    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        outputs = np.ascontiguousarray(self.outputs, dtype=np.float64)
        inputs.setflags(write=False)
        outputs.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "years", (int(self.years[0]), int(self.years[1])))
        y0, y1 = self.years
        if y1 < y0:
            raise ContractError(f"year range ({y0}, {y1}) is reversed")
        months = 12 * (y1 - y0 + 1)
        if inputs.ndim != 4 or inputs.shape[:2] != (months, len(FORCING_VARIABLES)):
            raise ContractError(
                f"inputs must be [{months}][4][n_lat][n_lon], got {inputs.shape}")
        if outputs.shape != (months, 2) + inputs.shape[2:]:
            raise ContractError(
                f"outputs must be [{months}][2]{list(inputs.shape[2:])}, got {outputs.shape}")
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(outputs))):
            raise ContractError("series values must all be finite")
        if np.any(outputs[:, 1] < 0.0):
            raise ContractError("PR channel must be non-negative")

    @property
    def n_months(self) -> int:
        return self.inputs.shape[0]


@dataclass(frozen=True, eq=False)
class Dataset:
    """All generated series, keyed by (oracle_id, scenario)."""

    grid: GridSpec
    scenarios: Mapping[str, tuple[int, int]]
    oracles: tuple[str, ...]
    series: Mapping[tuple[str, str], ScenarioSeries]

    def __post_init__(self):
        object.__setattr__(self, "scenarios", MappingProxyType(dict(self.scenarios)))
        object.__setattr__(self, "series", MappingProxyType(dict(self.series)))
        object.__setattr__(self, "oracles", tuple(self.oracles))
        want = {(o, s) for o in self.oracles for s in self.scenarios}
        if set(self.series) != want:
            raise ContractError("series keys must cover oracles x scenarios exactly")
        for (oid, sid), ser in self.series.items():
            if (ser.oracle_id, ser.scenario) != (oid, sid):
                raise ContractError(f"series under key {(oid, sid)} is mislabeled")
            if ser.years != tuple(self.scenarios[sid]):
                raise ContractError(f"series {(oid, sid)} has wrong year range")
            if ser.inputs.shape[2:] != self.grid.shape:
                raise ContractError(f"series {(oid, sid)} is on a different grid")


# ---------------------------------------------------------------------------
# Default parameter tables. Values are arbitrary but fixed: they define the
# desk-scale benchmark, and tests pin against them.

# Three distinct logistic shapes plus one linear ramp keep the four
# trajectories linearly independent (modulo constants and month terms)
# within the historical period alone, so a single-scenario regression
# design is full rank.
_RAMP_SHAPES = {
    "CO2": ("logistic", 6.0, 0.62),
    "CH4": ("logistic", 9.0, 0.38),
    "BC": ("logistic", 5.0, 0.50),
    "SO2": ("linear", 0.0, 0.0),
}

# (historical start, historical end, ssp126/245/370/585 end levels); SSP
# ramps start at the historical end level. BC and SO2 decline under the
# cleaner pathways, mimicking aerosol controls.
_RAMP_LEVELS = {
    "CO2": (0.20, 1.00, (1.30, 1.80, 2.60, 3.40)),
    "CH4": (0.30, 1.00, (1.10, 1.45, 1.95, 2.30)),
    "BC": (0.10, 0.90, (0.20, 0.45, 0.80, 0.60)),
    "SO2": (0.15, 0.95, (0.15, 0.40, 0.70, 0.50)),
}

DEFAULT_SEASONAL_AMPLITUDE = {"CO2": 0.02, "CH4": 0.03, "BC": 0.05, "SO2": 0.04}


def default_ramps() -> dict:
    """Ramp table covering the five standard scenarios for all forcers."""
    table = {}
    for g in FORCING_VARIABLES:
        shape, k, m = _RAMP_SHAPES[g]
        h0, h1, ssp_ends = _RAMP_LEVELS[g]
        entry = {"historical": RampSpec(h0, h1, shape, k, m)}
        for sid, end in zip(SSP_SCENARIOS, ssp_ends):
            entry[sid] = RampSpec(h1, end, shape, k, m)
        table[g] = entry
    return table


@dataclass(frozen=True)
class OracleParams:
    """Scalar knobs from which one oracle's parameter fields are built."""

    multiplier: float = 1.0
    noise_sigma: float = 0.5
    ar_rho: float = 0.5
    quad_scale: float = 1.0

    def __post_init__(self):
        if self.noise_sigma < 0.0:
            raise ContractError("noise_sigma must be >= 0")
        if not 0.0 <= self.ar_rho < 1.0:
            raise ContractError("ar_rho must lie in [0, 1)")


def default_oracle_params() -> dict:
    """Five stand-in models: distinct sensitivity scale and noise level."""
    rows = {
        "cm01": (0.85, 0.45, 0.50, 0.9),
        "cm02": (0.95, 0.60, 0.40, 1.1),
        "cm03": (1.05, 0.35, 0.60, 1.0),
        "cm04": (1.15, 0.55, 0.45, 0.8),
        "cm05": (1.25, 0.70, 0.55, 1.2),
    }
    return {oid: OracleParams(*row) for oid, row in rows.items()}


@dataclass(frozen=True, eq=False)
class GenerationConfig:
    """Everything build_dataset needs besides the seed.

    pattern_mode "structured" uses fixed latitude-dependent forcing
    patterns; "uniform" renders every forcer spatially flat (pattern 1),
    which makes planted sensitivities directly recoverable by per-cell
    regression.
    """

    n_lat: int = 36
    n_lon: int = 24
    scenarios: Mapping[str, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_YEAR_RANGES))
    oracle_params: Mapping[str, OracleParams] = field(
        default_factory=default_oracle_params)
    ramps: Mapping[str, Mapping[str, RampSpec]] = field(default_factory=default_ramps)
    seasonal_amplitude: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_SEASONAL_AMPLITUDE))
    pattern_mode: str = "structured"

    def __post_init__(self):
        object.__setattr__(self, "scenarios", MappingProxyType(
            {s: (int(y0), int(y1)) for s, (y0, y1) in dict(self.scenarios).items()}))
        object.__setattr__(self, "oracle_params",
                           MappingProxyType(dict(self.oracle_params)))
        object.__setattr__(self, "ramps", MappingProxyType(
            {g: MappingProxyType(dict(v)) for g, v in dict(self.ramps).items()}))
        object.__setattr__(self, "seasonal_amplitude",
                           MappingProxyType(dict(self.seasonal_amplitude)))
        if self.n_lat < 1 or self.n_lon < 1:
            raise ContractError("grid dimensions must be positive")
        if not self.scenarios:
            raise ContractError("at least one scenario is required")
        if not self.oracle_params:
            raise ContractError("at least one oracle is required")
        if self.pattern_mode not in ("structured", "uniform"):
            raise ContractError(f"unknown pattern_mode {self.pattern_mode!r}")
        for sid, (y0, y1) in self.scenarios.items():
            if y1 < y0:
                raise ContractError(f"scenario {sid} has reversed year range")
        ssp_ranges = {r for s, r in self.scenarios.items() if s.startswith("ssp")}
        if len(ssp_ranges) > 1:
            raise ContractError("all ssp scenarios must share one year range")
        if "historical" in self.scenarios and ssp_ranges:
            hist_end = self.scenarios["historical"][1]
            ssp_start = next(iter(ssp_ranges))[0]
            if ssp_start != hist_end + 1:
                raise ContractError(
                    "ssp coverage must begin the year after historical ends")
        for g in FORCING_VARIABLES:
            for sid in self.scenarios:
                if sid not in self.ramps.get(g, {}):
                    raise ContractError(f"no ramp for forcer {g}, scenario {sid}")


# ---------------------------------------------------------------------------
# Parameter field construction. phi is latitude in radians, lam longitude.

def forcing_pattern(grid: GridSpec, weights: LatWeights, forcer: str,
                    mode: str = "structured") -> Field:
    """Fixed spatial pattern for one forcer, area-weighted mean exactly 1."""
    lat = grid.lat_deg[:, None]
    phi = np.deg2rad(grid.lat_deg)[:, None]
    lam = np.deg2rad(grid.lon_deg)[None, :]
    if mode == "uniform":
        raw = np.ones(grid.shape)
    elif forcer == "CO2":
        raw = 1.0 + 0.06 * np.sin(phi)
    elif forcer == "CH4":
        raw = 1.0 + 0.10 * np.sin(phi) + 0.03 * np.cos(lam)
    elif forcer == "BC":
        raw = 1.0 + 0.5 * np.exp(-(((lat - 35.0) / 22.0) ** 2)) * (1.0 + 0.2 * np.cos(lam))
    elif forcer == "SO2":
        raw = 1.0 + 0.5 * np.exp(-(((lat - 40.0) / 20.0) ** 2)) * (1.0 + 0.2 * np.cos(lam - 1.0))
    else:
        raise ContractError(f"unknown forcer {forcer!r}")
    raw = np.broadcast_to(raw, grid.shape).copy()
    raw /= weighted_spatial_mean(raw, weights)
    return Field(grid=grid, values=raw, variable=f"pattern_{forcer}")


def build_forcing_params(grid: GridSpec, gen: GenerationConfig) -> ForcingParams:
    weights = lat_weights(grid)
    patterns = {g: forcing_pattern(grid, weights, g, gen.pattern_mode)
                for g in FORCING_VARIABLES}
    return ForcingParams(grid=grid, ramps=gen.ramps, patterns=patterns,
                         seasonal_amplitude=gen.seasonal_amplitude)


def build_oracle_config(grid: GridSpec, oracle_id: str,
                        params: OracleParams) -> OracleConfig:
    """Realize one oracle's parameter fields from its scalar knobs."""
    phi = np.deg2rad(grid.lat_deg)[:, None]
    lam = np.deg2rad(grid.lon_deg)[None, :]
    ones = np.ones(grid.shape)
    sin2, cos2 = np.sin(phi) ** 2 * ones, np.cos(phi) ** 2 * ones
    mu = params.multiplier

    def fld(values, name):
        return Field(grid=grid, values=np.broadcast_to(values, grid.shape).copy(),
                     variable=name)

    b = {
        "CO2": fld(mu * (2.2 + 0.9 * sin2), "tas_sens_CO2"),
        "CH4": fld(mu * (0.55 + 0.15 * np.sin(phi)) * ones, "tas_sens_CH4"),
        "BC": fld(-mu * (0.35 + 0.10 * cos2), "tas_sens_BC"),
        "SO2": fld(-mu * (0.45 + 0.15 * cos2), "tas_sens_SO2"),
    }
    c = {
        "CO2": fld(mu * 0.16 * (0.3 + cos2), "pr_sens_CO2"),
        "CH4": fld(mu * 0.06 * ones, "pr_sens_CH4"),
        "BC": fld(-mu * (0.12 + 0.05 * cos2), "pr_sens_BC"),
        "SO2": fld(-mu * (0.14 + 0.05 * cos2), "pr_sens_SO2"),
    }
    return OracleConfig(
        oracle_id=oracle_id,
        a=fld(288.0 - 32.0 * sin2 + 1.5 * np.cos(lam), "tas_base"),
        b=b,
        q=fld(params.quad_scale * (0.055 + 0.025 * cos2), "tas_quad"),
        s_amp=fld(7.0 * np.sin(phi) * ones, "tas_seasonal"),
        p0=fld(1.2 + 3.8 * cos2 * (1.0 + 0.15 * np.cos(2.0 * lam)), "pr_base"),
        c=c,
        noise_sigma=params.noise_sigma,
        ar_rho=params.ar_rho,
    )


# ---------------------------------------------------------------------------
# Generation.

def forcing_trajectory(params: ForcingParams, scenario: str, forcer: str,
                       years: tuple[int, int],
                       coverage: tuple[int, int] | None = None) -> np.ndarray:
    """Monthly global-mean forcing level over ``years`` (inclusive).

    The ramp position is measured at month centers within the scenario's
    full ``coverage`` (defaulting to the standard year ranges), so a
    partial-year request returns the identical slice of the full series.
    A sinusoidal seasonal cycle of the forcer's amplitude is added.
    """
    if coverage is None:
        coverage = DEFAULT_YEAR_RANGES.get(scenario)
        if coverage is None:
            raise ContractError(
                f"no default coverage for scenario {scenario!r}; pass coverage=")
    if forcer not in params.ramps or scenario not in params.ramps[forcer]:
        raise ContractError(f"no ramp for forcer {forcer!r}, scenario {scenario!r}")
    c0, c1 = coverage
    y0, y1 = years
    if not (c0 <= y0 <= y1 <= c1):
        raise ContractError(
            f"years {years} outside {scenario} coverage {coverage}")
    k = np.arange(12 * (y0 - c0), 12 * (y1 - c0 + 1))
    tau = (k + 0.5) / (12.0 * (c1 - c0 + 1))
    seasonal = params.seasonal_amplitude[forcer] * np.sin(_TWO_PI * (k % 12) / 12.0)
    return ramp_value(params.ramps[forcer][scenario], tau) + seasonal


def render_forcing_fields(trajectory: np.ndarray, pattern: Field,
                          grid: GridSpec) -> np.ndarray:
    """``field[t] = trajectory[t] * pattern``, shape [months, n_lat, n_lon]."""
    if not pattern.grid.matches(grid):
        raise ContractError("pattern grid does not match the target grid")
    trajectory = np.asarray(trajectory, dtype=np.float64)
    if trajectory.ndim != 1:
        raise ContractError("trajectory must be a 1-d monthly series")
    return np.multiply.outer(trajectory, pattern.values)


def _ar1_noise(n_steps: int, grid: GridSpec, sigma: float, rho: float,
               seed: int) -> np.ndarray:
    """Stationary per-cell AR(1) draws, shape [n_steps, n_lat, n_lon]."""
    if sigma == 0.0:
        return np.zeros((n_steps, grid.n_lat, grid.n_lon))
    z = Pcg32(seed).normals(n_steps * grid.n_cells).reshape(n_steps, grid.n_cells)
    x = z * (sigma * math.sqrt(1.0 - rho * rho))
    x[0] = sigma * z[0]  # stationary start: variance sigma^2 from step 0
    y = kernels.ar1_filter(np.ascontiguousarray(x), rho)
    return np.asarray(y).reshape(n_steps, grid.n_lat, grid.n_lon)


def simulate_oracle(config: OracleConfig, inputs: np.ndarray, seed: int) -> np.ndarray:
    """Run the planted process over a January-aligned input tensor.

    Parameters
    ----------
    config : OracleConfig
    inputs : [months][4][n_lat][n_lon], forcer order CO2, CH4, BC, SO2.
    seed : series-level seed; TAS and PR noise streams are derived from it.

    Returns
    -------
    [months][2][n_lat][n_lon] with channel order (TAS, PR).
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    grid = config.grid
    if inputs.ndim != 4 or inputs.shape[1:] != (len(FORCING_VARIABLES),
                                                grid.n_lat, grid.n_lon):
        raise ContractError(
            f"inputs must be [months][4][{grid.n_lat}][{grid.n_lon}], got {inputs.shape}")
    n = inputs.shape[0]
    season = np.sin(_TWO_PI * (np.arange(n) % 12) / 12.0)[:, None, None]

    tas = config.a.values + config.q.values * inputs.sum(axis=1) ** 2
    tas += config.s_amp.values * season
    pr = np.broadcast_to(config.p0.values, tas.shape).copy()
    for gi, g in enumerate(FORCING_VARIABLES):
        tas += config.b[g].values * inputs[:, gi]
        pr += config.c[g].values * inputs[:, gi]
    tas += _ar1_noise(n, grid, config.noise_sigma, config.ar_rho,
                      derive_seed(seed, "noise:tas"))
    pr += _ar1_noise(n, grid, config.noise_sigma, config.ar_rho,
                     derive_seed(seed, "noise:pr"))
    np.maximum(pr, 0.0, out=pr)

    out = np.empty((n, 2, grid.n_lat, grid.n_lon))
    out[:, 0] = tas
    out[:, 1] = pr
    return out


def series_seed(root_seed: int, oracle_id: str, scenario: str) -> int:
    """Sub-seed for one (oracle, scenario) series."""
    return derive_seed(root_seed, "oracle:" + oracle_id, "scenario:" + scenario)


def generate_series(gen: GenerationConfig, grid: GridSpec, params: ForcingParams,
                    config: OracleConfig, scenario: str, seed: int) -> ScenarioSeries:
    """Generate one (oracle, scenario) series from its own sub-seed."""
    years = gen.scenarios[scenario]
    channels = [
        render_forcing_fields(
            forcing_trajectory(params, scenario, g, years, coverage=years),
            params.patterns[g], grid)
        for g in FORCING_VARIABLES
    ]
    inputs = np.stack(channels, axis=1)
    outputs = simulate_oracle(config, inputs, seed)
    return ScenarioSeries(oracle_id=config.oracle_id, scenario=scenario,
                          years=years, inputs=inputs, outputs=outputs)


def build_dataset(gen: GenerationConfig, seed: int) -> Dataset:
    """Generate every (oracle, scenario) series.

    Sub-seeds are derived per (seed, oracle, scenario), so each series is
    reproducible in isolation and generation order does not matter.
    """
    grid = build_grid(gen.n_lat, gen.n_lon)
    params = build_forcing_params(grid, gen)
    oracles = tuple(sorted(gen.oracle_params))
    series = {}
    for oid in oracles:
        config = build_oracle_config(grid, oid, gen.oracle_params[oid])
        for sid in gen.scenarios:
            series[(oid, sid)] = generate_series(
                gen, grid, params, config, sid, series_seed(seed, oid, sid))
    return Dataset(grid=grid, scenarios=gen.scenarios, oracles=oracles,
                   series=series)
