import math

import pytest
from hypothesis import HealthCheck, settings

from qchopper.envelope import ScatterParams
from qchopper.protocol import make_constant, make_on_off, make_sign_change, rate_spectrum

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

MAKERS = {"on_off": make_on_off, "sign_change": make_sign_change}

# lines printed at the end of the session by the acceptance suite
ACCEPTANCE_LINES: dict[int, str] = {}


def scatter(kind, beta, delta=0.0, kerr=0.0, g0=1.0):
    """ScatterParams at drive speed beta; delta and kerr in units of Gamma_0."""
    if kind == "constant":
        p = make_constant(g0)
        gamma0 = rate_spectrum(p).gamma0
        return ScatterParams(p, delta * gamma0, kerr * gamma0)
    probe = MAKERS[kind](g0, 1.0)
    gamma0 = rate_spectrum(probe).gamma0
    return ScatterParams(MAKERS[kind](g0, beta * gamma0), delta * gamma0, kerr * gamma0)


@pytest.fixture
def sp_factory():
    return scatter


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
    passed = sum(line.startswith("PASS") for line in ACCEPTANCE_LINES.values())
    terminalreporter.write_line(f"{passed}/{len(ACCEPTANCE_LINES)} criteria passed")


def gamma0_of(kind, g0=1.0):
    return {"on_off": 1.5 * math.pi, "sign_change": 0.5 * math.pi, "constant": math.pi}[kind] * g0**2
