import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tdrc.environments import make_prediction  # noqa: E402
from tdrc.mdp import expectation_matrices  # noqa: E402

PREDICTION = ("boyan", "baird", "randomwalk-tabular", "randomwalk-inverted",
              "randomwalk-dependent")


@pytest.fixture(scope="session")
def models():
    out = {}
    for name in PREDICTION:
        mdp, phi, b, pi = make_prediction(name)
        out[name] = (mdp, phi, b, pi, expectation_matrices(mdp, b, pi, phi))
    return out


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
