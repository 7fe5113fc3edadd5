import os
import shutil
import subprocess
import sys

import numpy as np
import pytest


def thumbcodec_cli(*args):
    """Invoke the producer CLI as an external tool; the harness itself never
    links against it."""
    exe = shutil.which("thumbcodec")
    cmd = [exe] if exe else [sys.executable, "-m", "thumbcodec.cli"]
    proc = subprocess.run([*cmd, *[str(a) for a in args]],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"thumbcodec {args[0]} failed:\n{proc.stderr}")
    return proc.stdout


def write_tensor(path, arr):
    """Local writer for the documented TNSR layout (tests only)."""
    import struct

    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(b"TNSR" + struct.pack("<BB", 1, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def write_interchange_dir(directory, images, labels, tag):
    os.makedirs(directory, exist_ok=True)
    rows = ["filename,label,method_tag"]
    for i, img in enumerate(images):
        name = f"{i:05d}.tnsr"
        write_tensor(os.path.join(directory, name), img)
        label = "" if labels is None else int(labels[i])
        rows.append(f"{name},{label},{tag}")
    with open(os.path.join(directory, "manifest.csv"), "w") as fh:
        fh.write("\n".join(rows) + "\n")


@pytest.fixture(scope="session")
def exported_corpus(tmp_path_factory):
    """Originals exported through the producer CLI: a small corpus for the
    format-level and identity tests."""
    root = tmp_path_factory.mktemp("exports")
    data = root / "data"
    thumbcodec_cli("make-synthetic", "--out-dir", data,
                   "--train-count", "600", "--test-count", "200",
                   "--seed", "40")
    thumbcodec_cli("export-recons", "--data-dir", data, "--split", "train",
                   "--method", "original", "--tag", "original",
                   "--out-dir", root / "orig_train")
    thumbcodec_cli("export-recons", "--data-dir", data, "--split", "test",
                   "--method", "original", "--tag", "original",
                   "--out-dir", root / "orig_test")
    return root


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "pipeline: slow end-to-end tests that train models")


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
