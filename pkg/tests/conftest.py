import pytest

from helpers import BACKENDS
from ncsir import kernels
from ncsir.problem import small_test_problem

KERNEL_NAMES = ("euler_predict", "jac_state_apply", "jac_state_t_apply", "jac_control_apply",
                "jac_control_t_apply", "laplacian", "helmholtz_cg")


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route every kernel call through one backend for the duration of a test."""
    impl = BACKENDS[request.param]
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture(scope="session")
def small():
    return small_test_problem()


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_LINES
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":")), s)):
            terminalreporter.write_line(line)
