import pytest

from nonlocal_logistic import discretize, make_analytic_instance, make_gaussian_instance, make_rank_one_instance
from nonlocal_logistic.spectral import principal_eigenpair

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def analytic():
    return make_analytic_instance()


@pytest.fixture(scope="session")
def rank_one_15():
    return make_rank_one_instance(1.5)


@pytest.fixture(scope="session")
def gaussian():
    return make_gaussian_instance()


@pytest.fixture(scope="session")
def analytic_pb(analytic):
    pb = discretize(analytic, 200.0, 500, 20.0)
    return pb, principal_eigenpair(pb)


@pytest.fixture(scope="session")
def rank_one_15_pb(rank_one_15):
    pb = discretize(rank_one_15, 200.0, 500, 20.0)
    return pb, principal_eigenpair(pb)


@pytest.fixture(scope="session")
def gaussian_pb(gaussian):
    pb = discretize(gaussian, 200.0, 400, 20.0)
    return pb, principal_eigenpair(pb)
