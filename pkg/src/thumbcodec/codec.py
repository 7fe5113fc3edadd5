"""Bit-exact file formats: compressed images, dictionary and autoencoder
checkpoints, and the raw-tensor interchange files consumed by external
evaluation tools.

All multi-byte integers are little-endian; all float payloads are 32-bit
little-endian. Every format opens with a 4-byte magic and a version byte.
"""

import csv
import os
import struct

import numpy as np

from . import lca
from .autoencoder import AutoencoderParams
from .data import quantize_intensities
from .errors import CorruptFileError, IncompatibleDictionaryError
from .masks import (CHECKERBOARD, RANDOM, PixelMask, checkerboard_mask,
                    parse_mask, random_mask, serialize_mask)

MAGIC_IMAGE = b"TCIM"
MAGIC_DICT = b"TCDC"
MAGIC_AE = b"TCAE"
MAGIC_TENSOR = b"TNSR"
FORMAT_VERSION = 1


class CompressedImage:
    """Header (dims + mask descriptor) plus the kept pixels, byte-quantized,
    all channels per kept position in row-major order of kept positions."""

    def __init__(self, height, width, channels, mask, payload, n_clamped=0):
        if len(payload) != mask.kept_count * channels:
            raise ValueError(
                f"payload holds {len(payload)} bytes, expected "
                f"{mask.kept_count * channels}")
        self.height = height
        self.width = width
        self.channels = channels
        self.mask = mask
        self.payload = bytes(payload)
        self.n_clamped = n_clamped

    def serialize(self):
        head = MAGIC_IMAGE + struct.pack(
            "<BHHB", FORMAT_VERSION, self.height, self.width, self.channels)
        return head + serialize_mask(self.mask) + self.payload

    @classmethod
    def parse(cls, raw):
        if len(raw) < 10 or raw[:4] != MAGIC_IMAGE:
            raise CorruptFileError("not a compressed-image file (bad magic)")
        version, height, width, channels = struct.unpack("<BHHB", raw[4:10])
        if version != FORMAT_VERSION:
            raise CorruptFileError(f"unsupported version {version}")
        try:
            mask, used = parse_mask(raw[10:], height, width)
        except ValueError as exc:
            raise CorruptFileError(str(exc)) from exc
        payload = raw[10 + used:]
        if len(payload) != mask.kept_count * channels:
            raise CorruptFileError(
                f"payload holds {len(payload)} bytes, expected "
                f"{mask.kept_count * channels}")
        return cls(height, width, channels, mask, payload)

    def raw_bytes(self):
        return self.height * self.width * self.channels

    def payload_ratio(self):
        return len(self.payload) / self.raw_bytes()

    def total_ratio(self):
        return len(self.serialize()) / self.raw_bytes()


def compress(img, mask_kind, seed=0, keep_fraction=0.5, phase=0):
    """Step one of the codec: keep a 50% pixel subset, quantized to bytes.

    No dictionary involved; the mask is either the fixed checkerboard or a
    seeded random mask whose seed lands in the header so decompression can
    regenerate it.
    """
    img = np.asarray(img)
    h, w, c = img.shape
    if mask_kind == CHECKERBOARD:
        mask = checkerboard_mask(h, w, phase=phase)
    elif mask_kind == RANDOM:
        mask = random_mask(h, w, keep_fraction, seed)
    else:
        raise ValueError(f"unknown mask kind {mask_kind!r}")
    quant, n_clamped = quantize_intensities(img)
    payload = quant[mask.kept].tobytes()  # (kept, c) row-major
    return CompressedImage(h, w, c, mask, payload, n_clamped)


def decompress(comp, dictionary, params, overwrite_kept=True):
    """Step two: infer a sparse code from the kept pixels and reconstruct.

    By default the stored pixels overwrite their positions in the output
    (they are ground truth); overwrite_kept=False returns the pure
    reconstruction everywhere. Output is clamped to [0, 1] float32.
    """
    if dictionary.channels != comp.channels:
        raise IncompatibleDictionaryError(
            f"dictionary has {dictionary.channels} channels, image has "
            f"{comp.channels}")
    try:
        geom = dictionary.geometry(comp.height, comp.width)
    except ValueError as exc:
        raise IncompatibleDictionaryError(str(exc)) from exc
    mask = comp.mask
    kept_vals = np.frombuffer(comp.payload, dtype=np.uint8).reshape(
        mask.kept_count, comp.channels).astype(np.float32) / np.float32(255)
    masked = np.zeros((comp.height, comp.width, comp.channels),
                      dtype=np.float32)
    masked[mask.kept] = kept_vals
    code = lca.lca_encode(masked, mask, dictionary, params)
    recon = lca.reconstruct(dictionary, code, (comp.height, comp.width))
    recon = np.clip(recon, 0.0, 1.0).astype(np.float32)
    if overwrite_kept:
        recon[mask.kept] = kept_vals
    return recon


def save_compressed(comp, path):
    with open(path, "wb") as fh:
        fh.write(comp.serialize())


def load_compressed(path):
    with open(path, "rb") as fh:
        return CompressedImage.parse(fh.read())


def save_dictionary(dictionary, path, lam=0.0):
    """Versioned header (atom count, patch dims, channels, stride, training
    lambda) + float32 atom data. load(save(d)) is bit-exact for float32
    atoms."""
    k, ph, pw, c = dictionary.atoms.shape
    head = MAGIC_DICT + struct.pack("<BIHHBHd", FORMAT_VERSION, k, ph, pw, c,
                                    dictionary.stride, float(lam))
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(
            dictionary.atoms, dtype="<f4").tobytes())


def load_dictionary(path):
    """Returns (Dictionary, training lambda)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    head_size = 4 + struct.calcsize("<BIHHBHd")
    if len(raw) < head_size or raw[:4] != MAGIC_DICT:
        raise CorruptFileError("not a dictionary file (bad magic)")
    version, k, ph, pw, c, stride, lam = struct.unpack(
        "<BIHHBHd", raw[4:head_size])
    if version != FORMAT_VERSION:
        raise CorruptFileError(f"unsupported version {version}")
    expected = k * ph * pw * c * 4
    data = raw[head_size:]
    if len(data) != expected:
        raise CorruptFileError(
            f"atom data holds {len(data)} bytes, expected {expected}")
    atoms = np.frombuffer(data, dtype="<f4").reshape(k, ph, pw, c).copy()
    return lca.Dictionary(atoms=atoms, stride=stride), lam


def _write_array(fh, name, arr):
    arr = np.ascontiguousarray(arr, dtype="<f4")
    fh.write(struct.pack("<B", len(name)))
    fh.write(name.encode("ascii"))
    fh.write(struct.pack("<B", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.tobytes())


def _read_array(buf, pos):
    (name_len,) = struct.unpack_from("<B", buf, pos)
    pos += 1
    name = buf[pos:pos + name_len].decode("ascii")
    pos += name_len
    (ndim,) = struct.unpack_from("<B", buf, pos)
    pos += 1
    shape = struct.unpack_from(f"<{ndim}I", buf, pos)
    pos += 4 * ndim
    count = int(np.prod(shape)) if ndim else 1
    arr = np.frombuffer(buf, dtype="<f4", count=count, offset=pos)
    pos += 4 * count
    return name, arr.reshape(shape).copy(), pos


def save_autoencoder(params, path):
    """Versioned header + named shape table + float32 data for all weights,
    biases and momentum buffers."""
    h, w, c = params.input_shape
    arrays = [("w_enc", params.w_enc), ("b_enc", params.b_enc),
              ("b_dec", params.b_dec), ("m_w_enc", params.m_w_enc),
              ("m_b_enc", params.m_b_enc), ("m_b_dec", params.m_b_dec)]
    if not params.tied:
        arrays += [("w_dec", params.w_dec), ("m_w_dec", params.m_w_dec)]
    with open(path, "wb") as fh:
        fh.write(MAGIC_AE + struct.pack(
            "<BHHBHBB", FORMAT_VERSION, h, w, c, params.stride,
            int(params.tied), len(arrays)))
        for name, arr in arrays:
            _write_array(fh, name, arr)


def load_autoencoder(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    head_size = 4 + struct.calcsize("<BHHBHBB")
    if len(raw) < head_size or raw[:4] != MAGIC_AE:
        raise CorruptFileError("not an autoencoder checkpoint (bad magic)")
    version, h, w, c, stride, tied, n_arrays = struct.unpack(
        "<BHHBHBB", raw[4:head_size])
    if version != FORMAT_VERSION:
        raise CorruptFileError(f"unsupported version {version}")
    arrays = {}
    pos = head_size
    try:
        for _ in range(n_arrays):
            name, arr, pos = _read_array(raw, pos)
            arrays[name] = arr
    except (struct.error, ValueError) as exc:
        raise CorruptFileError(f"truncated checkpoint: {exc}") from exc
    return AutoencoderParams(
        w_enc=arrays["w_enc"], b_enc=arrays["b_enc"],
        w_dec=arrays.get("w_dec"), b_dec=arrays["b_dec"],
        input_shape=(h, w, c), stride=stride, tied=bool(tied),
        m_w_enc=arrays["m_w_enc"], m_b_enc=arrays["m_b_enc"],
        m_w_dec=arrays.get("m_w_dec"), m_b_dec=arrays["m_b_dec"])


def save_tensor(arr, path):
    """Interchange format: magic, version, ndim, u32 dims, float32 data."""
    arr = np.ascontiguousarray(arr, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(MAGIC_TENSOR + struct.pack("<BB", FORMAT_VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.tobytes())


def load_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 6 or raw[:4] != MAGIC_TENSOR:
        raise CorruptFileError("not a tensor file (bad magic)")
    version, ndim = struct.unpack("<BB", raw[4:6])
    if version != FORMAT_VERSION:
        raise CorruptFileError(f"unsupported version {version}")
    shape = struct.unpack_from(f"<{ndim}I", raw, 6)
    count = int(np.prod(shape)) if ndim else 1
    offset = 6 + 4 * ndim
    if len(raw) - offset < 4 * count:
        raise CorruptFileError("tensor data truncated")
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
    return data.reshape(shape).copy()


def write_manifest(path, rows):
    """rows: iterable of (filename, label, method_tag); label may be None."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "label", "method_tag"])
        for filename, label, tag in rows:
            writer.writerow([filename, "" if label is None else int(label),
                             tag])


def read_manifest(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            label = rec["label"]
            rows.append((rec["filename"],
                         None if label == "" else int(label),
                         rec["method_tag"]))
    return rows


def export_tensors(images, labels, tag, out_dir):
    """Write one interchange tensor per image plus a manifest.csv."""
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for i, img in enumerate(images):
        name = f"{i:05d}.tnsr"
        save_tensor(np.asarray(img, dtype=np.float32),
                    os.path.join(out_dir, name))
        label = None if labels is None else labels[i]
        rows.append((name, label, tag))
    write_manifest(os.path.join(out_dir, "manifest.csv"), rows)
    return rows
