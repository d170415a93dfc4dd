import os

import numpy as np
import pytest

from sensecomm.dataset import RECORD_BYTES, RECORDS_PER_FILE, TEST_FILE, TRAIN_FILES
from sensecomm.rng import Rng

_ACCEPTANCE_RESULTS: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        reason = ""
        if rep.skipped and rep.longrepr:
            reason = f"  ({rep.longrepr[2].removeprefix('Skipped: ')})"
        _ACCEPTANCE_RESULTS.append((doc, rep.outcome.upper(), reason))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for doc, outcome, reason in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"  [{outcome:7s}] {doc}{reason}")

# Real-corpus location for the reproduction criteria: either the env var or
# a data/ directory next to the repository root.
REAL_DATA_ENV = "CIFAR10_DATA_DIR"
REAL_DATA_DEFAULT = os.path.join(os.path.dirname(os.path.dirname(__file__)),
                                 "data", "cifar-10-batches-bin")


def real_data_dir() -> str | None:
    path = os.environ.get(REAL_DATA_ENV, REAL_DATA_DEFAULT)
    if all(os.path.isfile(os.path.join(path, f)) for f in TRAIN_FILES + [TEST_FILE]):
        return path
    return None


def write_batch_file(path, labels: np.ndarray, pixels: np.ndarray):
    """Write records in the binary batch layout: label byte + 3072 pixel
    bytes (channel-planar)."""
    n = labels.shape[0]
    rec = np.empty((n, RECORD_BYTES), dtype=np.uint8)
    rec[:, 0] = labels
    rec[:, 1:] = pixels.reshape(n, -1)
    rec.tofile(path)


@pytest.fixture(scope="session")
def fake_cifar_dir(tmp_path_factory):
    """A directory of valid-format batch files with random contents."""
    root = tmp_path_factory.mktemp("cifar_bin")
    gen = np.random.default_rng(2024)
    for fname in TRAIN_FILES + [TEST_FILE]:
        labels = gen.integers(0, 10, RECORDS_PER_FILE, dtype=np.uint8)
        pixels = gen.integers(0, 256, (RECORDS_PER_FILE, 3072), dtype=np.uint8)
        write_batch_file(root / fname, labels, pixels)
    return root


@pytest.fixture(scope="session")
def fake_dataset(fake_cifar_dir):
    """The fixture directory parsed once for tests that only inspect it."""
    from sensecomm.dataset import load_cifar10

    return load_cifar10(fake_cifar_dir)
