"""Experiment configuration: JSON schema, defaults, validation.

Every field has a default, so an empty JSON object is a valid config for
the full desk-scale experiment. Validation errors carry the JSON field
path of the offending value.

Top-level keys::

    seed, output_dir, dtype, grid, scenarios, oracles, generation,
    emulators, mlp, pattern_scaling, protocols, time_shift,
    rotation_include_ssp245

"oracles" is either a list of ids from the default table or a mapping
id -> {multiplier, noise_sigma, ar_rho, quad_scale}. "protocols" is a
subset of {baseline, time_shift, ssp_rotation}; the selected protocols
dictate which scenarios must be present.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .emulators import EMULATOR_KINDS, TrainConfig
from .errors import ConfigError, ContractError
from .splits import (BASELINE_POOL, BASELINE_TEST, DEFAULT_TIME_TEST_YEARS,
                     ROTATION_SCENARIOS)
from .synth import (DEFAULT_SEASONAL_AMPLITUDE, DEFAULT_YEAR_RANGES,
                    GenerationConfig, OracleParams, RampSpec,
                    default_oracle_params, default_ramps)

PROTOCOLS = ("baseline", "time_shift", "ssp_rotation")

_MISSING = object()


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _typed(doc: dict, key: str, path: str, kind, default=_MISSING):
    """Fetch doc[key] as kind; bools never pass for numbers."""
    if key not in doc:
        if default is _MISSING:
            _fail(f"{path}.{key}", "required field is missing")
        return default
    value = doc[key]
    if kind is bool:
        if not isinstance(value, bool):
            _fail(f"{path}.{key}", f"expected true/false, got {value!r}")
    elif kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(f"{path}.{key}", f"expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(f"{path}.{key}", f"expected a number, got {value!r}")
        value = float(value)
    elif kind is str:
        if not isinstance(value, str):
            _fail(f"{path}.{key}", f"expected a string, got {value!r}")
    elif kind is list:
        if not isinstance(value, list):
            _fail(f"{path}.{key}", f"expected a list, got {value!r}")
    elif kind is dict:
        if not isinstance(value, dict):
            _fail(f"{path}.{key}", f"expected an object, got {value!r}")
    return value


def _no_unknown_keys(doc: dict, path: str, allowed) -> None:
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        _fail(path, f"unknown key(s) {unknown}; allowed: {sorted(allowed)}")


def _year_range(value, path: str) -> tuple[int, int]:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in value)):
        _fail(path, f"expected [start_year, end_year], got {value!r}")
    if value[1] < value[0]:
        _fail(path, f"year range {list(value)} is reversed")
    return (value[0], value[1])


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Everything one experiment run needs, seed included."""

    seed: int = 0
    output_dir: str = "runs/desk"
    dtype: str = "f64"
    generation: GenerationConfig = None
    emulators: tuple[str, ...] = EMULATOR_KINDS
    mlp_train: TrainConfig = None
    mlp_hidden: int = 64
    ps_ridge: float = 0.0
    protocols: tuple[str, ...] = PROTOCOLS
    time_test_scenarios: tuple[str, ...] = (BASELINE_TEST,)
    time_test_years: tuple[int, int] = DEFAULT_TIME_TEST_YEARS
    rotation_include_ssp245: bool = True

    def __post_init__(self):
        if self.generation is None:
            object.__setattr__(self, "generation", GenerationConfig())
        if self.mlp_train is None:
            object.__setattr__(self, "mlp_train", TrainConfig())
        object.__setattr__(self, "emulators", tuple(self.emulators))
        object.__setattr__(self, "protocols", tuple(self.protocols))
        object.__setattr__(self, "time_test_scenarios",
                           tuple(self.time_test_scenarios))
        object.__setattr__(self, "time_test_years", tuple(self.time_test_years))
        self._validate()

    def _validate(self):
        if not self.output_dir:
            _fail("output_dir", "must be non-empty")
        if not (0 <= self.seed < 2 ** 64):
            _fail("seed", "must fit in 64 unsigned bits")
        if self.dtype not in ("f32", "f64"):
            _fail("dtype", f"must be 'f32' or 'f64', got {self.dtype!r}")
        if not self.emulators:
            _fail("emulators", "must select at least one emulator")
        for kind in self.emulators:
            if kind not in EMULATOR_KINDS:
                _fail("emulators", f"unknown kind {kind!r}; "
                      f"choose from {list(EMULATOR_KINDS)}")
        if len(set(self.emulators)) != len(self.emulators):
            _fail("emulators", "duplicate emulator kind")
        if self.mlp_hidden < 1:
            _fail("mlp.hidden", "must be >= 1")
        if self.ps_ridge < 0.0:
            _fail("pattern_scaling.ridge", "must be >= 0")
        if not self.protocols:
            _fail("protocols", "must select at least one protocol")
        for proto in self.protocols:
            if proto not in PROTOCOLS:
                _fail("protocols", f"unknown protocol {proto!r}; "
                      f"choose from {list(PROTOCOLS)}")
        if len(set(self.protocols)) != len(self.protocols):
            _fail("protocols", "duplicate protocol")

        scenarios = self.generation.scenarios
        if "baseline" in self.protocols:
            for sid in (*BASELINE_POOL, BASELINE_TEST):
                if sid not in scenarios:
                    _fail("protocols", f"baseline requires scenario {sid!r} "
                          "in scenarios")
        if "ssp_rotation" in self.protocols:
            needed = set(ROTATION_SCENARIOS) | {"historical"}
            if self.rotation_include_ssp245:
                needed.add(BASELINE_TEST)
            for sid in sorted(needed):
                if sid not in scenarios:
                    _fail("protocols", f"ssp_rotation requires scenario {sid!r} "
                          "in scenarios")
        if "time_shift" in self.protocols:
            if not self.time_test_scenarios:
                _fail("time_shift.test_scenarios", "must be non-empty")
            if "historical" not in scenarios:
                _fail("protocols", "time_shift requires scenario 'historical' "
                      "in scenarios")
            ty0, ty1 = self.time_test_years
            if ty1 < ty0:
                _fail("time_shift.test_years", "year range is reversed")
            for sid in self.time_test_scenarios:
                if sid not in scenarios:
                    _fail("time_shift.test_scenarios",
                          f"scenario {sid!r} is not in scenarios")
                y0, y1 = scenarios[sid]
                if not (y0 <= ty0 <= ty1 <= y1):
                    _fail("time_shift.test_years",
                          f"({ty0}, {ty1}) outside {sid} coverage ({y0}, {y1})")


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


def _parse_ramps(doc: dict, path: str) -> dict:
    table = default_ramps()
    for forcer, per_scenario in doc.items():
        if forcer not in table:
            _fail(path, f"unknown forcer {forcer!r}")
        if not isinstance(per_scenario, dict):
            _fail(f"{path}.{forcer}", "expected an object of scenario ramps")
        for sid, spec in per_scenario.items():
            if not isinstance(spec, dict):
                _fail(f"{path}.{forcer}.{sid}", "expected a ramp object")
            spath = f"{path}.{forcer}.{sid}"
            _no_unknown_keys(spec, spath,
                             ("start", "end", "shape", "steepness", "midpoint"))
            base = table[forcer].get(sid)
            fallback = base if base is not None else RampSpec(0.0, 0.0)
            try:
                ramp = RampSpec(
                    start_level=_typed(spec, "start", spath, float),
                    end_level=_typed(spec, "end", spath, float),
                    shape=_typed(spec, "shape", spath, str, fallback.shape),
                    steepness=_typed(spec, "steepness", spath, float,
                                     fallback.steepness),
                    midpoint=_typed(spec, "midpoint", spath, float,
                                    fallback.midpoint),
                )
            except ContractError as exc:
                _fail(spath, str(exc))
            table[forcer] = {**table[forcer], sid: ramp}
    return table


def _parse_oracles(value, path: str) -> dict:
    defaults = default_oracle_params()
    if isinstance(value, list):
        out = {}
        for oid in value:
            if not isinstance(oid, str) or oid not in defaults:
                _fail(path, f"unknown oracle id {oid!r}; the list form selects "
                      f"from {sorted(defaults)}")
            out[oid] = defaults[oid]
        if not out:
            _fail(path, "must select at least one oracle")
        return out
    if isinstance(value, dict):
        out = {}
        for oid, spec in value.items():
            opath = f"{path}.{oid}"
            if not isinstance(spec, dict):
                _fail(opath, "expected an object of oracle parameters")
            _no_unknown_keys(spec, opath, ("multiplier", "noise_sigma",
                                           "ar_rho", "quad_scale"))
            base = defaults.get(oid, OracleParams())
            try:
                out[oid] = OracleParams(
                    multiplier=_typed(spec, "multiplier", opath, float,
                                      base.multiplier),
                    noise_sigma=_typed(spec, "noise_sigma", opath, float,
                                       base.noise_sigma),
                    ar_rho=_typed(spec, "ar_rho", opath, float, base.ar_rho),
                    quad_scale=_typed(spec, "quad_scale", opath, float,
                                      base.quad_scale),
                )
            except ContractError as exc:
                _fail(opath, str(exc))
        if not out:
            _fail(path, "must define at least one oracle")
        return out
    _fail(path, "expected a list of ids or an object of oracle parameters")


def parse_config(doc: dict) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    _no_unknown_keys(doc, "config", (
        "seed", "output_dir", "dtype", "grid", "scenarios", "oracles",
        "generation", "emulators", "mlp", "pattern_scaling", "protocols",
        "time_shift", "rotation_include_ssp245"))

    grid_doc = _typed(doc, "grid", "config", dict, {})
    _no_unknown_keys(grid_doc, "grid", ("n_lat", "n_lon"))
    n_lat = _typed(grid_doc, "n_lat", "grid", int, 36)
    n_lon = _typed(grid_doc, "n_lon", "grid", int, 24)

    scen_doc = _typed(doc, "scenarios", "config", dict, None)
    if scen_doc is None:
        scenarios = None
    else:
        scenarios = {sid: _year_range(rng, f"scenarios.{sid}")
                     for sid, rng in scen_doc.items()}

    gen_doc = _typed(doc, "generation", "config", dict, {})
    _no_unknown_keys(gen_doc, "generation",
                     ("pattern_mode", "seasonal_amplitude", "ramps"))
    seasonal = _typed(gen_doc, "seasonal_amplitude", "generation", dict, {})
    amplitude = dict(DEFAULT_SEASONAL_AMPLITUDE)
    for forcer in seasonal:
        if forcer not in amplitude:
            _fail("generation.seasonal_amplitude", f"unknown forcer {forcer!r}")
        amplitude[forcer] = _typed(seasonal, forcer,
                                   "generation.seasonal_amplitude", float)

    try:
        generation = GenerationConfig(
            n_lat=n_lat,
            n_lon=n_lon,
            scenarios=DEFAULT_YEAR_RANGES if scenarios is None else scenarios,
            oracle_params=(default_oracle_params() if "oracles" not in doc
                           else _parse_oracles(doc["oracles"], "oracles")),
            ramps=_parse_ramps(_typed(gen_doc, "ramps", "generation", dict, {}),
                               "generation.ramps"),
            seasonal_amplitude=amplitude,
            pattern_mode=_typed(gen_doc, "pattern_mode", "generation", str,
                                "structured"),
        )
    except ContractError as exc:
        raise ConfigError(f"generation: {exc}") from exc

    mlp_doc = _typed(doc, "mlp", "config", dict, {})
    _no_unknown_keys(mlp_doc, "mlp", (
        "hidden", "epochs", "lr_init", "decay_gamma", "warmup_epochs",
        "warmup_lr", "post_warmup_lr", "batch_size", "optimizer",
        "adam_beta1", "adam_beta2", "adam_eps"))
    base = TrainConfig()
    try:
        mlp_train = TrainConfig(
            epochs=_typed(mlp_doc, "epochs", "mlp", int, base.epochs),
            lr_init=_typed(mlp_doc, "lr_init", "mlp", float, base.lr_init),
            decay_gamma=_typed(mlp_doc, "decay_gamma", "mlp", float,
                               base.decay_gamma),
            warmup_epochs=_typed(mlp_doc, "warmup_epochs", "mlp", int,
                                 base.warmup_epochs),
            warmup_lr=_typed(mlp_doc, "warmup_lr", "mlp", float, base.warmup_lr),
            post_warmup_lr=_typed(mlp_doc, "post_warmup_lr", "mlp", float,
                                  base.post_warmup_lr),
            batch_size=_typed(mlp_doc, "batch_size", "mlp", int, base.batch_size),
            optimizer=_typed(mlp_doc, "optimizer", "mlp", str, base.optimizer),
            adam_beta1=_typed(mlp_doc, "adam_beta1", "mlp", float,
                              base.adam_beta1),
            adam_beta2=_typed(mlp_doc, "adam_beta2", "mlp", float,
                              base.adam_beta2),
            adam_eps=_typed(mlp_doc, "adam_eps", "mlp", float, base.adam_eps),
        )
    except ContractError as exc:
        raise ConfigError(f"mlp: {exc}") from exc

    ps_doc = _typed(doc, "pattern_scaling", "config", dict, {})
    _no_unknown_keys(ps_doc, "pattern_scaling", ("ridge",))

    ts_doc = _typed(doc, "time_shift", "config", dict, {})
    _no_unknown_keys(ts_doc, "time_shift", ("test_scenarios", "test_years"))
    ts_scenarios = _typed(ts_doc, "test_scenarios", "time_shift", list,
                          [BASELINE_TEST])
    for sid in ts_scenarios:
        if not isinstance(sid, str):
            _fail("time_shift.test_scenarios", f"expected strings, got {sid!r}")
    ts_years = ts_doc.get("test_years", list(DEFAULT_TIME_TEST_YEARS))
    ts_years = _year_range(ts_years, "time_shift.test_years")

    emulators = _typed(doc, "emulators", "config", list, list(EMULATOR_KINDS))
    protocols = _typed(doc, "protocols", "config", list, list(PROTOCOLS))

    return ExperimentConfig(
        seed=_typed(doc, "seed", "config", int, 0),
        output_dir=_typed(doc, "output_dir", "config", str, "runs/desk"),
        dtype=_typed(doc, "dtype", "config", str, "f64"),
        generation=generation,
        emulators=tuple(emulators),
        mlp_train=mlp_train,
        mlp_hidden=_typed(mlp_doc, "hidden", "mlp", int, 64),
        ps_ridge=_typed(ps_doc, "ridge", "pattern_scaling", float, 0.0),
        protocols=tuple(protocols),
        time_test_scenarios=tuple(ts_scenarios),
        time_test_years=ts_years,
        rotation_include_ssp245=_typed(doc, "rotation_include_ssp245", "config",
                                       bool, True),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config at {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Full echo of a config; parse_config(config_to_dict(c)) == c."""
    gen = config.generation
    return {
        "seed": config.seed,
        "output_dir": config.output_dir,
        "dtype": config.dtype,
        "grid": {"n_lat": gen.n_lat, "n_lon": gen.n_lon},
        "scenarios": {sid: list(rng) for sid, rng in sorted(gen.scenarios.items())},
        "oracles": {
            oid: {"multiplier": p.multiplier, "noise_sigma": p.noise_sigma,
                  "ar_rho": p.ar_rho, "quad_scale": p.quad_scale}
            for oid, p in sorted(gen.oracle_params.items())},
        "generation": {
            "pattern_mode": gen.pattern_mode,
            "seasonal_amplitude": dict(sorted(gen.seasonal_amplitude.items())),
            "ramps": {
                forcer: {
                    sid: {"start": r.start_level, "end": r.end_level,
                          "shape": r.shape, "steepness": r.steepness,
                          "midpoint": r.midpoint}
                    for sid, r in sorted(per.items())}
                for forcer, per in sorted(gen.ramps.items())},
        },
        "emulators": list(config.emulators),
        "mlp": {"hidden": config.mlp_hidden,
                **{k: getattr(config.mlp_train, k)
                   for k in ("epochs", "lr_init", "decay_gamma", "warmup_epochs",
                             "warmup_lr", "post_warmup_lr", "batch_size",
                             "optimizer", "adam_beta1", "adam_beta2", "adam_eps")}},
        "pattern_scaling": {"ridge": config.ps_ridge},
        "protocols": list(config.protocols),
        "time_shift": {"test_scenarios": list(config.time_test_scenarios),
                       "test_years": list(config.time_test_years)},
        "rotation_include_ssp245": config.rotation_include_ssp245,
    }


def with_overrides(config: ExperimentConfig, seed: int | None = None,
                   output_dir: str | None = None,
                   protocols: tuple[str, ...] | None = None) -> ExperimentConfig:
    """CLI-flag overrides; validation reruns on the result."""
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = seed
    if output_dir is not None:
        kwargs["output_dir"] = output_dir
    if protocols is not None:
        kwargs["protocols"] = tuple(protocols)
    return replace(config, **kwargs) if kwargs else config
