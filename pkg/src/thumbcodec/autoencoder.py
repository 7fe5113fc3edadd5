"""Bottleneck autoencoder baseline: conv encoder, fully-connected decoder.

The encoder applies stride-4 ReLU convolution kernels; the flattened feature
map is the compressed code (half the input size in the default shape). The
decoder is a single ReLU affine map back to pixel space; with tied weights it
is instead the transposed convolution of the encoder kernels. Trained with
minibatch SGD plus momentum on the squared reconstruction error ||x - x'||^2
(no half factor). All gradients are exact reverse-mode derivatives with the
ReLU subgradient at 0 taken as 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import convops
from .errors import TrainingDivergedError

logger = logging.getLogger(__name__)


@dataclass
class AeConfig:
    kernel: int = 8
    stride: int = 4
    out_channels: int = 24
    learning_rate: float = 0.005
    momentum: float = 0.9
    batch_size: int = 50
    epochs: int = 2
    init_seed: int = 0
    tied: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")


@dataclass
class AutoencoderParams:
    """Weights, biases and their momentum buffers.

    w_enc: (out_channels, kh, kw, c) conv kernels; w_dec: (code_size,
    input_size) dense decoder, or None when tied (the decoder then reuses
    w_enc as a transposed convolution). The input geometry is fixed at
    construction.
    """

    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray | None
    b_dec: np.ndarray
    input_shape: tuple
    stride: int
    tied: bool = False
    m_w_enc: np.ndarray = None
    m_b_enc: np.ndarray = None
    m_w_dec: np.ndarray = None
    m_b_dec: np.ndarray = None
    loss_history: list = field(default_factory=list)

    def __post_init__(self):
        if self.m_w_enc is None:
            self.m_w_enc = np.zeros_like(self.w_enc)
        if self.m_b_enc is None:
            self.m_b_enc = np.zeros_like(self.b_enc)
        if self.m_w_dec is None and self.w_dec is not None:
            self.m_w_dec = np.zeros_like(self.w_dec)
        if self.m_b_dec is None:
            self.m_b_dec = np.zeros_like(self.b_dec)

    @property
    def geometry(self):
        h, w, _ = self.input_shape
        kh, kw = self.w_enc.shape[1:3]
        return convops.patch_geometry(h, w, kh, kw, self.stride)

    @property
    def code_size(self):
        g = self.geometry
        return g.code_h * g.code_w * self.w_enc.shape[0]

    @property
    def input_size(self):
        h, w, c = self.input_shape
        return h * w * c


def _glorot(rng, shape, fan_in, fan_out, dtype):
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape).astype(dtype)


def init_autoencoder(input_shape, config, dtype=np.float32):
    """Seeded uniform Glorot-range init; biases start at zero."""
    h, w, c = input_shape
    kh = kw = config.kernel
    geom = convops.patch_geometry(h, w, kh, kw, config.stride)
    k = config.out_channels
    code_size = geom.code_h * geom.code_w * k
    input_size = h * w * c
    rng = np.random.default_rng(config.init_seed)
    w_enc = _glorot(rng, (k, kh, kw, c), kh * kw * c, kh * kw * k, dtype)
    b_enc = np.zeros(k, dtype=dtype)
    if config.tied:
        w_dec = None
    else:
        w_dec = _glorot(rng, (code_size, input_size), code_size, input_size,
                        dtype)
    b_dec = np.zeros(input_size, dtype=dtype)
    return AutoencoderParams(w_enc, b_enc, w_dec, b_dec,
                             input_shape=tuple(input_shape),
                             stride=config.stride, tied=config.tied)


def _forward_batch(params, xs):
    """Returns (pre_enc, codes, pre_dec, recons_flat); xs is (b, h, w, c)."""
    b = xs.shape[0]
    geom = params.geometry
    k = params.w_enc.shape[0]
    windows = convops.extract_patches(xs, geom).reshape(
        b * geom.code_h * geom.code_w, -1)
    pre_enc = windows @ params.w_enc.reshape(k, -1).T + params.b_enc
    codes = np.maximum(pre_enc, 0.0)
    code_grid = codes.reshape(b, geom.code_h, geom.code_w, k)
    if params.tied:
        pre_dec = convops.reconstruct_batch(
            code_grid, params.w_enc, geom).reshape(b, -1) + params.b_dec
    else:
        pre_dec = code_grid.reshape(b, -1) @ params.w_dec + params.b_dec
    recons = np.maximum(pre_dec, 0.0)
    return windows, pre_enc, code_grid, pre_dec, recons


def ae_compress(params, x):
    """Bottleneck code for one image: flattened ReLU conv features."""
    x = np.asarray(x)
    if x.shape != params.input_shape:
        raise ValueError(f"image shape {x.shape} does not match model "
                         f"{params.input_shape}")
    _, _, code_grid, _, _ = _forward_batch(params, x[None])
    return code_grid.reshape(-1)


def ae_decompress(params, code):
    """Decoder half only: ReLU affine (or tied transposed-conv) map back to
    an image tensor."""
    code = np.asarray(code)
    if code.size != params.code_size:
        raise ValueError(f"code length {code.size} does not match model "
                         f"bottleneck {params.code_size}")
    geom = params.geometry
    k = params.w_enc.shape[0]
    if params.tied:
        grid = code.reshape(1, geom.code_h, geom.code_w, k)
        pre = convops.reconstruct_batch(
            grid, params.w_enc, geom).reshape(-1) + params.b_dec
    else:
        pre = code.reshape(-1) @ params.w_dec + params.b_dec
    return np.maximum(pre, 0.0).reshape(params.input_shape)


def ae_forward(params, x):
    """(code, reconstruction); identical bit-for-bit to decompress(compress(x))."""
    code = ae_compress(params, x)
    return code, ae_decompress(params, code)


def ae_loss(params, x):
    """Squared L2 reconstruction error ||x - x'||^2 (no half factor)."""
    x = np.asarray(x)
    _, x_rec = ae_forward(params, x)
    d = x.astype(np.float64) - x_rec.astype(np.float64)
    return float(np.sum(d * d))


def _backward_batch(params, xs):
    """Mean loss and mean parameter gradients over the batch."""
    b = xs.shape[0]
    geom = params.geometry
    k = params.w_enc.shape[0]
    windows, pre_enc, code_grid, pre_dec, recons = _forward_batch(params, xs)
    x_flat = xs.reshape(b, -1)
    diff = recons - x_flat
    loss = float(np.mean(np.sum(diff.astype(np.float64) ** 2, axis=1)))

    d_pre_dec = 2.0 * diff * (pre_dec > 0)
    g_b_dec = d_pre_dec.sum(axis=0) / b
    if params.tied:
        d_dec_imgs = d_pre_dec.reshape(b, *params.input_shape)
        g_w_dec = None
        g_w_enc_dec = convops.kernel_gradient_batch(
            code_grid, d_dec_imgs, geom, k)
        d_code = convops.correlate_batch(d_dec_imgs, params.w_enc, geom)
        d_code = d_code.reshape(b * geom.code_h * geom.code_w, k)
    else:
        code_flat = code_grid.reshape(b, -1)
        g_w_dec = code_flat.T @ d_pre_dec / b
        g_w_enc_dec = 0.0
        d_code = (d_pre_dec @ params.w_dec.T).reshape(
            b * geom.code_h * geom.code_w, k)
    d_pre_enc = d_code * (pre_enc > 0)
    g_b_enc = d_pre_enc.sum(axis=0) / b
    g_w_enc = (d_pre_enc.T @ windows).reshape(params.w_enc.shape)
    g_w_enc = (g_w_enc + g_w_enc_dec) / b
    return loss, g_w_enc, g_b_enc, g_w_dec, g_b_dec


def ae_backward(params, x):
    """Exact gradients of ae_loss for one image: (g_w_enc, g_b_enc, g_w_dec,
    g_b_dec); g_w_dec is None for tied models."""
    x = np.asarray(x)
    _, g_w_enc, g_b_enc, g_w_dec, g_b_dec = _backward_batch(params, x[None])
    return g_w_enc, g_b_enc, g_w_dec, g_b_dec


def train_autoencoder(dataset, config):
    """Minibatch SGD with momentum on the mean batch loss; per-epoch seeded
    shuffle; loss history recorded per batch. Deterministic given seeds."""
    images = dataset.images
    if images.shape[0] == 0:
        raise ValueError("dataset is empty")
    params = init_autoencoder(images.shape[1:], config)
    shuffle_rng = np.random.default_rng(
        np.random.SeedSequence([int(config.init_seed), 3]))
    n = images.shape[0]
    lr = np.float32(config.learning_rate)
    mom = np.float32(config.momentum)
    counter = 0
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        for b0 in range(0, n, config.batch_size):
            batch = images[order[b0:b0 + config.batch_size]]
            loss, g_w_enc, g_b_enc, g_w_dec, g_b_dec = _backward_batch(
                params, batch)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} batch {counter}",
                    epoch=epoch, batch=counter)
            params.m_w_enc = mom * params.m_w_enc + g_w_enc.astype(np.float32)
            params.m_b_enc = mom * params.m_b_enc + g_b_enc.astype(np.float32)
            params.m_b_dec = mom * params.m_b_dec + g_b_dec.astype(np.float32)
            params.w_enc = params.w_enc - lr * params.m_w_enc
            params.b_enc = params.b_enc - lr * params.m_b_enc
            params.b_dec = params.b_dec - lr * params.m_b_dec
            if not params.tied:
                params.m_w_dec = (mom * params.m_w_dec
                                  + g_w_dec.astype(np.float32))
                params.w_dec = params.w_dec - lr * params.m_w_dec
            params.loss_history.append((epoch, counter, loss))
            logger.debug("epoch %d batch %d loss %.4f", epoch, counter, loss)
            counter += 1
    return params
