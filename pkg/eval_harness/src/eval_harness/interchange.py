"""Reader for the file-based interchange boundary.

The producing toolchain writes a directory of raw tensor files plus a
`manifest.csv` with columns filename,label,method_tag. Tensor files are
little-endian: 4-byte magic "TNSR", version byte, ndim byte, u32 dims,
float32 data. This package deliberately re-implements the reader from that
documented layout instead of importing the producer.
"""

import csv
import os
import struct

import numpy as np

MAGIC = b"TNSR"
VERSION = 1


class InterchangeError(ValueError):
    pass


def load_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 6 or raw[:4] != MAGIC:
        raise InterchangeError(f"{path}: not a tensor file")
    version, ndim = struct.unpack("<BB", raw[4:6])
    if version != VERSION:
        raise InterchangeError(f"{path}: unsupported version {version}")
    shape = struct.unpack_from(f"<{ndim}I", raw, 6)
    count = int(np.prod(shape)) if ndim else 1
    offset = 6 + 4 * ndim
    if len(raw) - offset < 4 * count:
        raise InterchangeError(f"{path}: truncated tensor data")
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
    return data.reshape(shape).copy()


def read_manifest(directory):
    """Rows of (filename, label-or-None, method_tag), in manifest order."""
    path = os.path.join(directory, "manifest.csv")
    if not os.path.isfile(path):
        raise InterchangeError(f"missing manifest: {path}")
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            label = rec["label"]
            rows.append((rec["filename"],
                         None if label == "" else int(label),
                         rec["method_tag"]))
    return rows


def load_directory(directory):
    """Returns (images (n,h,w,c) float32, labels (n,) or None, method_tag)."""
    rows = read_manifest(directory)
    if not rows:
        raise InterchangeError(f"{directory}: empty manifest")
    images = np.stack([load_tensor(os.path.join(directory, name))
                       for name, _, _ in rows]).astype(np.float32)
    labels = None
    if all(label is not None for _, label, _ in rows):
        labels = np.array([label for _, label, _ in rows], dtype=np.int64)
    tags = {tag for _, _, tag in rows}
    if len(tags) != 1:
        raise InterchangeError(f"{directory}: mixed method tags {tags}")
    return images, labels, tags.pop()


def check_alignment(rows_a, rows_b):
    """Two manifests describe the same image sequence (same length and
    per-position labels)."""
    if len(rows_a) != len(rows_b):
        raise InterchangeError(
            f"manifest length mismatch: {len(rows_a)} vs {len(rows_b)}")
    for i, ((_, la, _), (_, lb, _)) in enumerate(zip(rows_a, rows_b)):
        if la is not None and lb is not None and la != lb:
            raise InterchangeError(f"label mismatch at row {i}: {la} vs {lb}")
