import pytest

from switchforce import ControllerGains, Environment, RigidPlant, WristParams

ACCEPTANCE_LINES = []


@pytest.fixture
def rigid_plant():
    return RigidPlant(M=1.0, b=0.0)


@pytest.fixture
def wall():
    return Environment(k_e=1e6, b_e=10.0)


@pytest.fixture
def gains_bf5():
    return ControllerGains(M_a=0.8, k_p=4000.0, k_d=80.0, k_f=1.0, b_f=5.0)


@pytest.fixture
def wrist171():
    return WristParams(M_t=0.05, k_t=5e4, b_t=171.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES, key=lambda item: item[0]):
            terminalreporter.write_line(line)


def record(number, ok, detail):
    """Queue one acceptance line for the terminal summary."""
    ACCEPTANCE_LINES.append((number, f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"))
    print(ACCEPTANCE_LINES[-1][1])
    return ok
