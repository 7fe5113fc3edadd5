import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thumbcodec import data
from thumbcodec.errors import CorruptDatasetError, DatasetNotFoundError
from thumbcodec.synthetic import synth_images, write_cifar10_dir


def test_load_splits_and_shapes(corpus_dir):
    train = data.load_cifar10(corpus_dir, "train")
    test = data.load_cifar10(corpus_dir, "test")
    assert train.images.shape[1:] == (32, 32, 3)
    assert test.images.shape[1:] == (32, 32, 3)
    assert len(train) > len(test)
    assert train.labels.shape == (len(train),)
    assert train.images.min() >= 0.0 and train.images.max() <= 1.0


def test_load_is_deterministic(corpus_dir):
    a = data.load_cifar10(corpus_dir, "test")
    b = data.load_cifar10(corpus_dir, "test")
    assert np.array_equal(a.images, b.images)
    assert np.array_equal(a.labels, b.labels)


def test_max_byte_record_maps_to_one(tmp_path):
    raw = bytes([3]) + b"\xff" * 3072
    for name in data.TRAIN_FILES:
        (tmp_path / name).write_bytes(raw)
    ds = data.load_cifar10(str(tmp_path), "train")
    assert ds.labels[0] == 3
    assert np.all(ds.images[0] == 1.0)


def test_planar_layout_conversion(tmp_path):
    # distinct R/G/B planes land in the channel axis
    pixels = bytes([10] * 1024 + [20] * 1024 + [30] * 1024)
    for name in data.TRAIN_FILES:
        (tmp_path / name).write_bytes(bytes([0]) + pixels)
    ds = data.load_cifar10(str(tmp_path), "train")
    np.testing.assert_allclose(ds.images[0, :, :, 0], 10 / 255, rtol=1e-6)
    np.testing.assert_allclose(ds.images[0, :, :, 1], 20 / 255, rtol=1e-6)
    np.testing.assert_allclose(ds.images[0, :, :, 2], 30 / 255, rtol=1e-6)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetNotFoundError):
        data.load_cifar10(str(tmp_path), "test")


def test_truncated_record_reports_offset(tmp_path):
    good = bytes(3073) * 2
    (tmp_path / "test_batch.bin").write_bytes(good + bytes(100))
    with pytest.raises(CorruptDatasetError) as err:
        data.load_cifar10(str(tmp_path), "test")
    assert err.value.offset == 2 * 3073


def test_nested_directory_layout(tmp_path):
    images, labels = synth_images(10, seed=3)
    nested = tmp_path / "cifar-10-batches-bin"
    write_cifar10_dir(str(nested), images, labels, images, labels)
    ds = data.load_cifar10(str(tmp_path), "test")
    assert len(ds) == 10


def test_to_bytes_trivial_values():
    zero = np.zeros((2, 2, 3), dtype=np.float32)
    one = np.ones((2, 2, 3), dtype=np.float32)
    assert data.to_bytes(zero) == b"\x00" * 12
    assert data.to_bytes(one) == b"\xff" * 12


def test_quantize_half_rounds_away_from_zero():
    # 0.5 * 255 = 127.5 -> 128
    arr, n_clamped = data.quantize_intensities(np.array([0.5]))
    assert arr[0] == 128
    assert n_clamped == 0


def test_quantize_clamps_and_counts():
    arr, n_clamped = data.quantize_intensities(np.array([-0.2, 0.4, 1.7]))
    assert list(arr) == [0, 102, 255]
    assert n_clamped == 2


@given(st.binary(min_size=3073, max_size=3073))
def test_roundtrip_any_record(record):
    img = data.from_bytes(record[1:])
    assert data.to_bytes(img) == record[1:]


def test_roundtrip_through_loader(tmp_path, rng):
    images, labels = synth_images(6, seed=11)
    write_cifar10_dir(str(tmp_path), images, labels, images, labels)
    raw = (tmp_path / "test_batch.bin").read_bytes()
    ds = data.load_cifar10(str(tmp_path), "test")
    for i in range(len(ds)):
        offset = i * 3073
        assert data.to_bytes(ds.images[i]) == raw[offset + 1:offset + 3073]
