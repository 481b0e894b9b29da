import sys

import numpy as np
import pytest

from lcfshape.elasticity import LoadData
from lcfshape.geometry import BaselineDesign, DeformationMap, build_baseline
from lcfshape.material import MaterialParams
from lcfshape.optimize import DesignProblem
from lcfshape.thermal import RobinData

HOT_SIDE = "293 + 150*(1 + x)"


def steel(**overrides):
    kw = dict(
        rho_cte=1.2e-5, k_cond=40.0, K_hard=1000.0, n_hard=0.15, sigma_f=900.0, eps_f=0.3,
        b_exp=-0.09, c_exp=-0.6, Q_act=0.005, T0=293.0, m_weib=2.0,
    )
    kw.update(overrides)
    return MaterialParams.from_engineering(2e5, 0.3, **kw)


@pytest.fixture(scope="session")
def material():
    return steel()


@pytest.fixture(scope="session")
def design():
    return BaselineDesign(1.0, (0.0, 0.0), 0.3, 1.5)


@pytest.fixture(scope="session")
def coarse_mesh(design):
    return build_baseline(design, 0.15)


@pytest.fixture(scope="session")
def demo_mesh(design):
    return build_baseline(design, 0.08)


def make_problem(design, mesh, material, T_e=HOT_SIDE, K=1e4, **kw):
    return DesignProblem(
        design, mesh, DeformationMap.fourier(design, K=K), material, RobinData(100.0, T_e, material.k_cond),
        LoadData.zero(), **kw,
    )


@pytest.fixture(scope="session")
def coarse_problem(design, coarse_mesh, material):
    return make_problem(design, coarse_mesh, material)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acceptance.RESULTS):
        terminalreporter.write_line(acceptance.RESULTS[n])
