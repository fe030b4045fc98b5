import numpy as np
import pytest

from steepwell.radial import build_grid

ACCEPTANCE_LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_grid():
    return build_grid(5, 4.0, 256)


@pytest.fixture(scope="session")
def ball_small():
    return build_grid(5, 1.0, 128)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
