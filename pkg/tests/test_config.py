"""Config schema: defaults, echo round trip, validation messages."""

import json

import pytest

from climashift.config import (ExperimentConfig, config_to_dict,
                               default_config, load_config, parse_config,
                               with_overrides)
from climashift.errors import ConfigError


def assert_configs_equal(a: ExperimentConfig, b: ExperimentConfig):
    assert config_to_dict(a) == config_to_dict(b)


class TestDefaults:
    def test_empty_document_is_valid(self):
        cfg = parse_config({})
        assert_configs_equal(cfg, default_config())

    def test_desk_scale_defaults(self):
        cfg = default_config()
        assert cfg.generation.n_lat == 36
        assert cfg.generation.n_lon == 24
        assert cfg.dtype == "f64"
        assert len(cfg.generation.oracle_params) == 5
        assert cfg.protocols == ("baseline", "time_shift", "ssp_rotation")
        assert cfg.emulators == ("climatology", "pattern_scaling", "mlp")

    def test_echo_round_trip(self):
        cfg = default_config()
        doc = config_to_dict(cfg)
        json.dumps(doc)  # must be JSON-serializable as-is
        assert_configs_equal(parse_config(doc), cfg)

    def test_echo_round_trip_with_overrides(self):
        doc = {
            "seed": 9, "dtype": "f32", "grid": {"n_lat": 6, "n_lon": 4},
            "oracles": ["cm01", "cm03"],
            "generation": {"pattern_mode": "uniform",
                           "seasonal_amplitude": {"CO2": 0.5}},
            "mlp": {"hidden": 8, "epochs": 3, "warmup_epochs": 2},
            "pattern_scaling": {"ridge": 0.25},
            "protocols": ["baseline", "time_shift"],
            "time_shift": {"test_scenarios": ["ssp126"],
                           "test_years": [2020, 2030]},
        }
        cfg = parse_config(doc)
        assert_configs_equal(parse_config(config_to_dict(cfg)), cfg)
        assert cfg.generation.pattern_mode == "uniform"
        assert cfg.mlp_train.warmup_epochs == 2
        assert sorted(cfg.generation.oracle_params) == ["cm01", "cm03"]


class TestValidationMessages:
    """Errors must carry the JSON path of the offending field."""

    @pytest.mark.parametrize("doc,needle", [
        ({"seed": "abc"}, "config.seed"),
        ({"seed": True}, "config.seed"),
        ({"dtype": "f16"}, "dtype"),
        ({"grid": {"n_lat": "six"}}, "grid.n_lat"),
        ({"grid": {"rows": 6}}, "grid"),
        ({"scenarios": {"historical": [2000]}}, "scenarios.historical"),
        ({"scenarios": {"historical": [2010, 2000]}}, "scenarios.historical"),
        ({"oracles": ["cm99"]}, "oracles"),
        ({"oracles": {"cm01": {"sigma": 1.0}}}, "oracles.cm01"),
        ({"mlp": {"epochs": 0}}, "mlp"),
        ({"mlp": {"hidden": True}}, "mlp.hidden"),
        ({"mlp": {"momentum": 0.9}}, "mlp"),
        ({"pattern_scaling": {"ridge": -1}}, "pattern_scaling.ridge"),
        ({"protocols": ["baseline", "baseline"]}, "protocols"),
        ({"protocols": ["cross_validation"]}, "protocols"),
        ({"protocols": []}, "protocols"),
        ({"emulators": ["transformer"]}, "emulators"),
        ({"emulators": []}, "emulators"),
        ({"time_shift": {"test_years": [2023, 2015]}}, "time_shift.test_years"),
        ({"time_shift": {"test_scenarios": [1]}}, "time_shift.test_scenarios"),
        ({"generation": {"pattern_mode": "fractal"}}, "generation"),
        ({"generation": {"seasonal_amplitude": {"O3": 1.0}}},
         "generation.seasonal_amplitude"),
        ({"generation": {"ramps": {"CO2": {"ssp245": {"slope": 2}}}}},
         "generation.ramps.CO2.ssp245"),
        ({"unknown_top": 1}, "config"),
    ])
    def test_field_path_in_message(self, doc, needle):
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert needle in str(err.value)

    def test_root_must_be_object(self):
        with pytest.raises(ConfigError):
            parse_config([1, 2, 3])

    def test_bool_rejected_for_numbers(self):
        with pytest.raises(ConfigError):
            parse_config({"pattern_scaling": {"ridge": True}})


class TestProtocolScenarioCoupling:
    def test_baseline_needs_all_five_scenarios(self):
        doc = {"scenarios": {"historical": [1850, 2014],
                             "ssp126": [2015, 2100],
                             "ssp370": [2015, 2100],
                             "ssp585": [2015, 2100]}}
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert "ssp245" in str(err.value)

    def test_time_shift_only_has_light_requirements(self):
        doc = {"scenarios": {"historical": [1850, 2014],
                             "ssp245": [2015, 2100]},
               "protocols": ["time_shift"]}
        cfg = parse_config(doc)
        assert cfg.protocols == ("time_shift",)

    def test_time_shift_years_must_lie_in_test_scenario(self):
        doc = {"protocols": ["time_shift"],
               "time_shift": {"test_scenarios": ["ssp245"],
                              "test_years": [2005, 2023]}}
        with pytest.raises(ConfigError) as err:
            parse_config(doc)
        assert "time_shift.test_years" in str(err.value)

    def test_rotation_without_ssp245(self):
        doc = {"scenarios": {"historical": [1850, 2014],
                             "ssp126": [2015, 2100],
                             "ssp370": [2015, 2100],
                             "ssp585": [2015, 2100]},
               "protocols": ["ssp_rotation"],
               "rotation_include_ssp245": False}
        cfg = parse_config(doc)
        assert cfg.rotation_include_ssp245 is False
        with pytest.raises(ConfigError):
            parse_config({**doc, "rotation_include_ssp245": True})


class TestOracleAndRampOverrides:
    def test_mapping_form_overrides_parameters(self):
        cfg = parse_config({"oracles": {"cm01": {"noise_sigma": 0.0},
                                        "cmX": {"multiplier": 2.0}}})
        assert cfg.generation.oracle_params["cm01"].noise_sigma == 0.0
        # unlisted fields keep their defaults
        base = parse_config({}).generation.oracle_params["cm01"]
        assert cfg.generation.oracle_params["cm01"].ar_rho == base.ar_rho
        assert cfg.generation.oracle_params["cmX"].multiplier == 2.0

    def test_ramp_override_keeps_other_scenarios(self):
        doc = {"generation": {"ramps": {"CO2": {"ssp245": {
            "start": 1.0, "end": 2.0, "shape": "linear"}}}}}
        cfg = parse_config(doc)
        ramps = cfg.generation.ramps
        assert ramps["CO2"]["ssp245"].start_level == 1.0
        assert ramps["CO2"]["ssp245"].end_level == 2.0
        default = parse_config({}).generation.ramps
        assert ramps["CO2"]["ssp585"] == default["CO2"]["ssp585"]
        assert ramps["CH4"] == default["CH4"]

    def test_unknown_forcer_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"generation": {"ramps": {"N2O": {}}}})


class TestLoadConfig:
    def test_reads_json_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"seed": 11}))
        assert load_config(path).seed == 11

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(tmp_path / "absent.json")
        assert "not found" in str(err.value)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{broken")
        with pytest.raises(ConfigError) as err:
            load_config(path)
        assert "JSON" in str(err.value)


class TestOverrides:
    def test_overrides_replace_fields(self):
        cfg = default_config()
        new = with_overrides(cfg, seed=5, output_dir="elsewhere",
                             protocols=("baseline", "time_shift"))
        assert new.seed == 5
        assert new.output_dir == "elsewhere"
        assert new.protocols == ("baseline", "time_shift")
        assert new.generation is cfg.generation

    def test_no_overrides_returns_same_config(self):
        cfg = default_config()
        assert with_overrides(cfg) is cfg

    def test_override_validation_still_runs(self):
        with pytest.raises(ConfigError):
            with_overrides(default_config(), protocols=("nope",))
