"""CIFAR-10 binary ingestion and byte/intensity conversion.

An image tensor is a (height, width, channels) float array of intensities in
[0, 1], row-major with the channel axis innermost. The loader converts
CIFAR's channel-planar records to this interleaved layout once; everything
downstream uses it.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptDatasetError, DatasetNotFoundError

RECORD_BYTES = 3073  # 1 label byte + 32*32*3 pixel bytes
IMAGE_SHAPE = (32, 32, 3)

TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
TEST_FILES = ("test_batch.bin",)


@dataclass
class Dataset:
    """An ordered image stack with optional class labels.

    images: (n, h, w, c) float32 in [0, 1]; labels: (n,) uint8 or None.
    Immutable by convention once constructed; safe to share across workers.
    """

    images: np.ndarray
    labels: np.ndarray | None
    split: str = field(default="train")

    def __len__(self):
        return self.images.shape[0]

    def __getitem__(self, i):
        return self.images[i]

    def subset(self, start, stop):
        labels = None if self.labels is None else self.labels[start:stop]
        return Dataset(self.images[start:stop], labels, self.split)


def _split_files(split):
    if split == "train":
        return TRAIN_FILES
    if split == "test":
        return TEST_FILES
    raise ValueError(f"split must be 'train' or 'test', got {split!r}")


def _resolve_dir(directory):
    # accept either the files directly or the canonical extraction dir
    nested = os.path.join(directory, "cifar-10-batches-bin")
    if not os.path.isfile(os.path.join(directory, TEST_FILES[0])) \
            and os.path.isdir(nested):
        return nested
    return directory


def load_cifar10(directory, split="train"):
    """Load one split of the CIFAR-10 binary dataset from `directory`.

    Returns a Dataset of 32x32x3 images normalized to [0, 1] (byte / 255)
    with labels attached, in file order. Raises DatasetNotFoundError for a
    missing file and CorruptDatasetError (with the byte offset of the first
    bad record) for a truncated one.
    """
    directory = _resolve_dir(directory)
    blobs = []
    for name in _split_files(split):
        path = os.path.join(directory, name)
        if not os.path.isfile(path):
            raise DatasetNotFoundError(f"missing CIFAR-10 file: {path}")
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) == 0 or len(raw) % RECORD_BYTES != 0:
            raise CorruptDatasetError(
                f"{path}: truncated record at byte offset "
                f"{len(raw) - len(raw) % RECORD_BYTES}",
                offset=len(raw) - len(raw) % RECORD_BYTES,
            )
        blobs.append(np.frombuffer(raw, dtype=np.uint8))
    records = np.concatenate(blobs).reshape(-1, RECORD_BYTES)
    labels = records[:, 0].copy()
    # planar (c, h, w) -> interleaved (h, w, c)
    planes = records[:, 1:].reshape(-1, 3, 32, 32)
    images = planes.transpose(0, 2, 3, 1).astype(np.float32) / np.float32(255)
    return Dataset(images, labels, split)


def quantize_intensities(values):
    """Quantize [0, 1] intensities to bytes, rounding halves away from zero.

    Out-of-range values are clamped first. Returns (uint8 array of the same
    shape, count of clamped entries).
    """
    arr = np.asarray(values)
    clamped = np.clip(arr, 0.0, 1.0)
    n_clamped = int(np.count_nonzero(clamped != arr))
    scaled = clamped.astype(np.float64) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8), n_clamped


def to_bytes(img):
    """Serialize an image tensor to CIFAR-plane-ordered pixel bytes.

    Exact inverse of the loader's normalization and layout conversion, up to
    quantization: to_bytes(load(record)) reproduces the record's pixel bytes.
    """
    quantized, _ = quantize_intensities(img)
    return quantized.transpose(2, 0, 1).tobytes()


def from_bytes(raw, shape=IMAGE_SHAPE):
    """Inverse of `to_bytes`: planar pixel bytes -> [0, 1] image tensor."""
    h, w, c = shape
    arr = np.frombuffer(raw, dtype=np.uint8, count=h * w * c)
    planes = arr.reshape(c, h, w)
    return planes.transpose(1, 2, 0).astype(np.float32) / np.float32(255)
