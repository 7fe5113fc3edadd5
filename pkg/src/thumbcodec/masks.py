"""Pixel-dropout masks: the compressed representation keeps 50% of pixels.

Masks are purely spatial; a dropped position drops all channels. Omitted
pixels are represented as zeros plus the boolean map, never as sentinel
values: consumers must consult the mask.
"""

import struct
from dataclasses import dataclass

import numpy as np

CHECKERBOARD = "checkerboard"
RANDOM = "random"
EXPLICIT = "explicit"

_KIND_TAGS = {CHECKERBOARD: 0, RANDOM: 1}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


@dataclass(frozen=True)
class PixelMask:
    """Boolean keep-map over spatial positions, shared across channels."""

    kept: np.ndarray  # (h, w) bool
    kind: str
    phase: int | None = None
    seed: int | None = None

    @property
    def height(self):
        return self.kept.shape[0]

    @property
    def width(self):
        return self.kept.shape[1]

    @property
    def kept_count(self):
        return int(np.count_nonzero(self.kept))

    @property
    def keep_fraction(self):
        return self.kept_count / self.kept.size

    def complement(self):
        """Mask keeping exactly the omitted positions."""
        if self.kind == CHECKERBOARD:
            return PixelMask(~self.kept, CHECKERBOARD, phase=1 - self.phase)
        return PixelMask(~self.kept, EXPLICIT)


def checkerboard_mask(height, width, phase=0):
    """Parity mask: (r, c) is kept iff (r + c + phase) is even."""
    if height < 1 or width < 1:
        raise ValueError("mask dimensions must be >= 1")
    if phase not in (0, 1):
        raise ValueError(f"phase must be 0 or 1, got {phase}")
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    return PixelMask((rows + cols + phase) % 2 == 0, CHECKERBOARD, phase=phase)


def _mask_from_seed(height, width, seed, kept_count):
    rng = np.random.default_rng(int(seed))
    order = rng.permutation(height * width)
    kept = np.zeros(height * width, dtype=bool)
    kept[order[:kept_count]] = True
    return PixelMask(kept.reshape(height, width), RANDOM, seed=int(seed))


def random_mask(height, width, keep_fraction, seed):
    """Keep exactly round(keep_fraction * h * w) positions, chosen uniformly
    without replacement by a seeded generator. Halves round away from zero.
    Same seed, same mask."""
    if height < 1 or width < 1:
        raise ValueError("mask dimensions must be >= 1")
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    kept_count = int(np.floor(keep_fraction * height * width + 0.5))
    return _mask_from_seed(height, width, seed, kept_count)


def apply_mask(img, mask):
    """Zero every omitted position in all channels; kept positions unchanged."""
    img = np.asarray(img)
    if img.shape[:2] != mask.kept.shape:
        raise ValueError(
            f"mask {mask.kept.shape} does not match image spatial dims "
            f"{img.shape[:2]}")
    return img * mask.kept[:, :, None].astype(img.dtype)


def serialize_mask(mask):
    """Codec descriptor: kind tag byte, then phase byte (checkerboard) or
    8-byte little-endian seed + 4-byte kept count (random)."""
    if mask.kind == CHECKERBOARD:
        return bytes([_KIND_TAGS[CHECKERBOARD], mask.phase])
    if mask.kind == RANDOM:
        return struct.pack("<BQI", _KIND_TAGS[RANDOM], mask.seed,
                           mask.kept_count)
    raise ValueError(f"{mask.kind} masks have no serialized form")


def parse_mask(raw, height, width):
    """Inverse of `serialize_mask`; needs the image dims from the header.

    Returns (mask, bytes consumed).
    """
    if len(raw) < 2:
        raise ValueError("mask descriptor truncated")
    tag = raw[0]
    if tag not in _TAG_KINDS:
        raise ValueError(f"unknown mask kind tag {tag}")
    if _TAG_KINDS[tag] == CHECKERBOARD:
        phase = raw[1]
        if phase not in (0, 1):
            raise ValueError(f"bad checkerboard phase {phase}")
        return checkerboard_mask(height, width, phase), 2
    if len(raw) < 13:
        raise ValueError("random mask descriptor truncated")
    _, seed, kept_count = struct.unpack("<BQI", raw[:13])
    if kept_count > height * width:
        raise ValueError("mask kept count exceeds image size")
    return _mask_from_seed(height, width, seed, kept_count), 13
