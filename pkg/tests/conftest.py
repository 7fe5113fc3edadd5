import os

import numpy as np
import pytest
from hypothesis import settings

from thumbcodec.synthetic import make_synthetic_dataset

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

# one pass/fail line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS = []


def record_acceptance(name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_RESULTS.append(f"[{status}] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """Small synthetic corpus in CIFAR-10 binary layout (150 train/50 test),
    or the real dataset when THUMBCODEC_CIFAR10 is set."""
    env = os.environ.get("THUMBCODEC_CIFAR10")
    if env:
        return env
    out = tmp_path_factory.mktemp("corpus")
    return make_synthetic_dataset(str(out), 150, 50, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
