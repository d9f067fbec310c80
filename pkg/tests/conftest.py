import numpy as np
import pytest

from smgof.model import ModelKind, ObservationSeries, UniformGrid


def make_series(y, xhat=None, kind=ModelKind.LOCAL_VOL):
    y = np.asarray(y, dtype=float)
    if xhat is None:
        xhat = np.ones((y.size, ModelKind(kind).covariate_dim))
    return ObservationSeries(UniformGrid(y.size), y, xhat, kind)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
