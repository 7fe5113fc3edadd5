"""Synthetic thumbnail corpus in the CIFAR-10 binary layout.

Stands in for the real dataset in demos and tests when it is not on disk:
piecewise-smooth color fields with one dominant shape per image (disk or
rectangle in one of five palette colors), secondary clutter, and fine texture
noise. Labels encode (shape kind, palette color) as 10 classes, so the images
carry a learnable classification signal. Files are written exactly as the
standard binary distribution (3073-byte records, channel-planar pixels) and
are meant to be read back through `data.load_cifar10`.
"""

import os

import numpy as np

from .data import TEST_FILES, TRAIN_FILES

PALETTE = np.array([
    [0.85, 0.20, 0.20],  # red
    [0.20, 0.75, 0.25],  # green
    [0.20, 0.35, 0.85],  # blue
    [0.90, 0.80, 0.20],  # yellow
    [0.75, 0.25, 0.80],  # magenta
])


def _smooth_field(rng, h, w):
    """Bilinear upsample of 4x4 RGB noise: smooth background gradients."""
    coarse = rng.uniform(0.1, 0.9, size=(4, 4, 3))
    ys = np.linspace(0, 3, h)
    xs = np.linspace(0, 3, w)
    y0 = np.clip(ys.astype(int), 0, 2)
    x0 = np.clip(xs.astype(int), 0, 2)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    c00 = coarse[y0][:, x0]
    c01 = coarse[y0][:, x0 + 1]
    c10 = coarse[y0 + 1][:, x0]
    c11 = coarse[y0 + 1][:, x0 + 1]
    return (c00 * (1 - fy) * (1 - fx) + c01 * (1 - fy) * fx
            + c10 * fy * (1 - fx) + c11 * fy * fx)


def _draw_disk(img, rng, color, r_range=(5, 9)):
    h, w, _ = img.shape
    radius = rng.uniform(*r_range)
    cy = rng.uniform(radius, h - radius)
    cx = rng.uniform(radius, w - radius)
    yy, xx = np.mgrid[0:h, 0:w]
    inside = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
    img[inside] = color


def _draw_rect(img, rng, color, side_range=(8, 16)):
    h, w, _ = img.shape
    rh = int(rng.integers(*side_range))
    rw = int(rng.integers(*side_range))
    r0 = int(rng.integers(0, h - rh + 1))
    c0 = int(rng.integers(0, w - rw + 1))
    img[r0:r0 + rh, c0:c0 + rw] = color


def synth_images(count, seed, height=32, width=32):
    """Generate `count` labeled thumbnails; label = shape_kind * 5 + color."""
    rng = np.random.default_rng(seed)
    images = np.empty((count, height, width, 3), dtype=np.float32)
    labels = np.empty(count, dtype=np.uint8)
    for i in range(count):
        img = _smooth_field(rng, height, width)
        # secondary clutter first so the dominant shape stays on top
        for _ in range(int(rng.integers(0, 3))):
            color = rng.uniform(0.1, 0.9, size=3)
            if rng.integers(0, 2):
                _draw_disk(img, rng, color, r_range=(2, 4))
            else:
                _draw_rect(img, rng, color, side_range=(3, 7))
        kind = int(rng.integers(0, 2))
        bucket = int(rng.integers(0, 5))
        color = np.clip(PALETTE[bucket] + rng.uniform(-0.08, 0.08, 3), 0, 1)
        if kind == 0:
            _draw_disk(img, rng, color)
        else:
            _draw_rect(img, rng, color)
        img += rng.normal(0.0, 0.02, size=img.shape)
        images[i] = np.clip(img, 0.0, 1.0)
        labels[i] = kind * 5 + bucket
    return images, labels


def _write_records(path, images, labels):
    quant = np.floor(images.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    planar = quant.transpose(0, 3, 1, 2).reshape(images.shape[0], -1)
    with open(path, "wb") as fh:
        for label, pixels in zip(labels, planar):
            fh.write(bytes([int(label)]))
            fh.write(pixels.tobytes())


def write_cifar10_dir(out_dir, train_images, train_labels, test_images,
                      test_labels):
    """Write the standard file set: five train batches plus the test batch."""
    os.makedirs(out_dir, exist_ok=True)
    n = train_images.shape[0]
    bounds = np.linspace(0, n, len(TRAIN_FILES) + 1).astype(int)
    for name, lo, hi in zip(TRAIN_FILES, bounds[:-1], bounds[1:]):
        _write_records(os.path.join(out_dir, name),
                       train_images[lo:hi], train_labels[lo:hi])
    _write_records(os.path.join(out_dir, TEST_FILES[0]),
                   test_images, test_labels)


def make_synthetic_dataset(out_dir, train_count, test_count, seed=0):
    """Generate and write a full synthetic corpus; returns the directory."""
    train_images, train_labels = synth_images(train_count, seed)
    test_images, test_labels = synth_images(test_count, seed + 1)
    write_cifar10_dir(out_dir, train_images, train_labels, test_images,
                      test_labels)
    return out_dir
