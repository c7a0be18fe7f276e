"""Shared fixtures: small datasets reused across test modules."""

import dataclasses

import pytest

from climashift.config import default_config
from climashift.synth import GenerationConfig, build_dataset, default_oracle_params

TINY_SCENARIOS = {"historical": (1990, 2000), "ssp126": (2001, 2010),
                  "ssp245": (2001, 2010), "ssp370": (2001, 2010),
                  "ssp585": (2001, 2010)}


def tiny_generation(n_lat=6, n_lon=4, oracle_ids=("cm01", "cm02"), **kwargs):
    params = default_oracle_params()
    return GenerationConfig(
        n_lat=n_lat, n_lon=n_lon, scenarios=dict(TINY_SCENARIOS),
        oracle_params={oid: params[oid] for oid in oracle_ids}, **kwargs)


def tiny_config(tmp_dir, epochs=3, **kwargs):
    """Full experiment config scaled down for fast tests."""
    base = default_config()
    return dataclasses.replace(
        base, generation=tiny_generation(), output_dir=str(tmp_dir),
        time_test_years=(2001, 2005),
        mlp_train=dataclasses.replace(base.mlp_train, epochs=epochs), **kwargs)


@pytest.fixture(scope="session")
def tiny_dataset():
    """6x4 grid, 11 + 4x10 years, two oracles. Seed 0."""
    return build_dataset(tiny_generation(), seed=0)


@pytest.fixture(scope="session")
def paper_range_dataset():
    """2x2 grid at the full year ranges (1850-2014 / 2015-2100), 5 oracles.

    Split-law tests need the real chunk counts; the grid is minimal to
    keep generation cheap.
    """
    return build_dataset(GenerationConfig(n_lat=2, n_lon=2), seed=0)
