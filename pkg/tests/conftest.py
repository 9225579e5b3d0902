import pytest
from hypothesis import HealthCheck, settings

from drekit.field import CMatrix
from drekit.lieop import VectorField
from drekit.model import bundled_model_path, load_model
from drekit.riccati import RiccatiData

settings.register_profile(
    "drekit", max_examples=40, deadline=None, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("drekit")


def mat(rows, n=2):
    return CMatrix.parse([[str(v) for v in r] for r in rows], n)


@pytest.fixture(scope="session")
def rl_model():
    return load_model(bundled_model_path())


@pytest.fixture(scope="session")
def rl_field():
    return VectorField.parse(["(-x1 + x2)/(1 + x1^2)", "x1 - x2"])


@pytest.fixture(scope="session")
def rl_data(rl_field):
    A = rl_field.jacobian()
    R = mat([[0, 0], [0, 1]])
    Q = mat([["3 + 4*x1^2 + x1^4", 0], [0, 1]])
    return RiccatiData(A, R, Q, rl_field)


@pytest.fixture(scope="session")
def rl_X():
    return mat([["2*(1 + x1^2)^2", "1 + x1^2"], ["1 + x1^2", 1]])


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
