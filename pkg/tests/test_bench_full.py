"""Full-size experiment checks on the built-in tables.

These run the real 600+ session pipelines, so the front half of each
experiment is shared per module via fixtures.
"""

import pytest

from enose.bench import (PipelineConfig, get_table, prepare_features,
                         run_experiment, run_regression_experiment)

SEED = 42
QUIET = PipelineConfig(noise_sigma=0.0)
DEFAULT = PipelineConfig()


@pytest.fixture(scope="module")
def quiet_ethanol():
    table = get_table("binary_ethanol")
    return table, prepare_features(table, QUIET, SEED)


@pytest.fixture(scope="module")
def default_ethanol():
    table = get_table("binary_ethanol")
    return table, prepare_features(table, DEFAULT, SEED)


def test_noiseless_binary_ethanol_is_perfect(quiet_ethanol):
    table, prepared = quiet_ethanol
    rep = run_experiment(table, QUIET, SEED, prepared=prepared)
    assert rep.accuracy == 1.0


def test_noiseless_binary_methanol_is_perfect():
    rep = run_experiment("binary_methanol", QUIET, SEED)
    assert rep.accuracy == 1.0


def test_noiseless_regression_hits_two_percent_of_range(quiet_ethanol):
    table, prepared = quiet_ethanol
    rep = run_regression_experiment(table, QUIET, SEED, prepared=prepared)
    acetone_range = 100.0  # ppm span of the table's acetone column
    assert rep.rmse_ppm < 0.02 * acetone_range
    assert len(rep.loss_trace) >= 1


def test_default_noise_regression_quality(default_ethanol):
    table, prepared = default_ethanol
    rep = run_regression_experiment(table, DEFAULT, SEED, prepared=prepared)
    assert rep.r2 is not None and rep.r2 > 0.8
    assert rep.rmse_ppm == pytest.approx(rep.rmse_ppm)  # finite
    assert rep.mae_ppm >= 0.0
