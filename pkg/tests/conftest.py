from __future__ import annotations

import math

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def j0_first_zero_oracle() -> float:
    """First zero of J0 by bisection on its power series (independent of the package)."""

    def j0(x):
        term, total, k = 1.0, 1.0, 0
        while abs(term) > 1e-18:
            k += 1
            term *= -(x * x / 4.0) / (k * k)
            total += term
        return total

    a, b = 2.0, 3.0
    for _ in range(200):
        m = 0.5 * (a + b)
        if j0(a) * j0(m) <= 0.0:
            b = m
        else:
            a = m
        if b - a < 1e-16:
            break
    return 0.5 * (a + b)


Z0 = j0_first_zero_oracle()


@pytest.fixture(scope="session")
def z0_oracle() -> float:
    return Z0


def sin_p_zero(p: float) -> float:
    return (p - 1.0) ** (1.0 / p) * math.pi / (p * math.sin(math.pi / p))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
