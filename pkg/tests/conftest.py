import numpy as np
import pytest

from proxekit.superquadric import SuperquadricParams

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def record(criterion: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"[{status}] {criterion}" + (f"  ({detail})" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_params(rng: np.random.Generator, scale=(0.05, 0.5), spread=0.3) -> SuperquadricParams:
    return SuperquadricParams(
        scale=tuple(rng.uniform(*scale, 3)),
        shape=tuple(rng.uniform(0.1, 1.9, 2)),
        translation=tuple(rng.uniform(-spread, spread, 3)),
        rotation=tuple(rng.uniform(-np.pi, np.pi, 3)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
