import math

import pytest

from dude_lab.model import SimulationParams, SystemParams, dbm_to_watt, default_params


@pytest.fixture
def fig_params():
    """lambda_S = 10 lambda_M, P = 46/20 dBm, Q = 20/10 dBm, alpha = 3, no noise."""
    return default_params()


@pytest.fixture
def raw_params():
    return SystemParams(
        lambda_m=1.0,
        lambda_s=10.0,
        p_m=10**1.6,
        p_s=0.1,
        q_m=0.1,
        q_s=0.01,
        alpha=3.0,
    )


def params_db(q_m_dbm=20.0, q_s_dbm=10.0, **kw):
    return default_params(q_m=dbm_to_watt(q_m_dbm), q_s=dbm_to_watt(q_s_dbm), **kw)


def small_sim(drops=20_000, seed=11, **kw):
    return SimulationParams(drops=drops, seed=seed, **kw)


C_ALPHA3 = 4 * math.pi / (3 * math.sqrt(3))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
