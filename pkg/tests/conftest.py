import numpy as np
import pytest

from geoexpand import (
    ExpansionConfig,
    FieldSpec,
    KernelParams,
    learn_expansion,
    random_subsample,
    sample_stationary_field,
    sample_two_regime_field,
    stationarity_report,
)

FIXTURE_SEED = 7
WITHIN = KernelParams(1.0, 3.0, 0.01)


def two_regime_fixture(seed=FIXTURE_SEED, n=20, geometry="half-plane"):
    """20-point subsample of a half-plane two-regime field, gap 10 within-regime sd."""
    base = FieldSpec(generator="two-regime", kernel=WITHIN, geometry=geometry, seed=seed)
    spec = FieldSpec(**{**base.__dict__, "gap": 10.0 * base.within_sd})
    field, labels = sample_two_regime_field(spec)
    sample, idx = random_subsample(field, n, seed)
    return sample, labels[idx], spec


def stationary_fixture(seed=FIXTURE_SEED, n=20):
    spec = FieldSpec(kernel=WITHIN, seed=seed)
    sample, _ = random_subsample(sample_stationary_field(spec), n, seed)
    return sample


@pytest.fixture(scope="session")
def regime_run():
    sample, labels, spec = two_regime_fixture()
    exp = learn_expansion(sample, ExpansionConfig(seed=FIXTURE_SEED))
    return sample, labels, spec, exp, stationarity_report(sample, exp)


@pytest.fixture(scope="session")
def stationary_run():
    sample = stationary_fixture()
    exp = learn_expansion(sample, ExpansionConfig(seed=FIXTURE_SEED))
    return sample, exp, stationarity_report(sample, exp)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

STATIONARY_XFAIL = (
    "one latent coordinate per sample also fits the pair-level noise of a single "
    "stationary draw, so the ratio drops well below 1 (see notes/decisions.md)"
)
