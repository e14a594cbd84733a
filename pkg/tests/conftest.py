import numpy as np
import pytest

from charn_ecf import simulate, study_model

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption(
        "--paper-scale", action="store_true", default=False,
        help="run the full 400x400 Monte Carlo reproduction (hours)",
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--paper-scale"):
        return
    skip = pytest.mark.skip(reason="needs --paper-scale")
    for item in items:
        if "paper_scale" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """``record(label, ok, detail)``: log one acceptance line, then assert ``ok``."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ar_null_series():
    return simulate(study_model("AR_i", "null"), 300, 1, 11)


@pytest.fixture(scope="session")
def arch_null_series():
    return simulate(study_model("ARCH_ii", "null"), 300, 1, 12)


class Pairs:
    """Regression pairs that need not come from one chained series."""

    def __init__(self, predictors, responses):
        self.predictors = np.asarray(predictors, dtype=float)
        self.responses = np.asarray(responses, dtype=float)

    @property
    def n(self):
        return self.predictors.size


@pytest.fixture
def three_pairs():
    return Pairs([-1.0, 0.0, 1.0], [-0.9, 0.0, 0.9])
