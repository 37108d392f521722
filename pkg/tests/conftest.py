import pytest

from blrm_designs import BivariatePrior, ModelSpec, ToxicityIntervals, TrialData


@pytest.fixture
def model():
    return ModelSpec.default()


@pytest.fixture
def prior():
    return BivariatePrior()


@pytest.fixture
def wide_tti():
    return ToxicityIntervals(0.25, 0.16, 0.33)


@pytest.fixture
def narrow_tti():
    return ToxicityIntervals(0.25, 0.20, 0.30)


@pytest.fixture
def four_clean_cohorts():
    """0/3 DLTs at each of the four lowest doses."""
    return TrialData((3, 3, 3, 3, 0, 0, 0), (0,) * 7)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
