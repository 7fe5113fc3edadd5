"""Strided patch arithmetic shared by the sparse coder and the autoencoder.

All convolution-like operators in this package use one fixed geometry. For an
input of spatial size (height, width), patch (patch_h, patch_w) and stride s,
the code grid has ceil(height/s) x ceil(width/s) cells, so the patch plane
always covers the image. Cell (i, j) places its patch with top-left corner at
(i*s - pad_r, j*s - pad_c); the pad offsets centre the tiled plane over the
image. Writes that fall outside the image are discarded, and symmetrically the
image is zero-padded when patches are gathered, which makes `extract_patches`
the exact adjoint of `accumulate_patches`.

Arrays are channel-last: images (batch, h, w, c), patch stacks
(batch, code_h, code_w, patch_h, patch_w, c). All operations preserve the
input dtype and are deterministic.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@dataclass(frozen=True)
class PatchGeometry:
    height: int
    width: int
    patch_h: int
    patch_w: int
    stride: int
    code_h: int
    code_w: int
    pad_r: int
    pad_c: int
    padded_h: int
    padded_w: int


def patch_geometry(height, width, patch_h, patch_w, stride):
    """Resolve the code-grid geometry for an image/patch/stride combination.

    Raises ValueError when the patch cannot cover the image (patch smaller
    than the stride) or any dimension is non-positive.
    """
    if min(height, width, patch_h, patch_w, stride) < 1:
        raise ValueError("image, patch and stride dimensions must be >= 1")
    if patch_h < stride or patch_w < stride:
        raise ValueError(
            f"patch {patch_h}x{patch_w} smaller than stride {stride} leaves "
            "coverage gaps"
        )
    code_h = -(-height // stride)
    code_w = -(-width // stride)
    padded_h = (code_h - 1) * stride + patch_h
    padded_w = (code_w - 1) * stride + patch_w
    return PatchGeometry(
        height=height,
        width=width,
        patch_h=patch_h,
        patch_w=patch_w,
        stride=stride,
        code_h=code_h,
        code_w=code_w,
        pad_r=(padded_h - height) // 2,
        pad_c=(padded_w - width) // 2,
        padded_h=padded_h,
        padded_w=padded_w,
    )


def extract_patches(images, geom):
    """Gather the patch under every code cell: (b,h,w,c) -> (b,ch,cw,ph,pw,c).

    The image is zero-padded to the patch plane first, so border patches see
    zeros outside the image.
    """
    b, h, w, c = images.shape
    if (h, w) != (geom.height, geom.width):
        raise ValueError(f"image {h}x{w} does not match geometry "
                         f"{geom.height}x{geom.width}")
    padded = np.zeros((b, geom.padded_h, geom.padded_w, c), dtype=images.dtype)
    padded[:, geom.pad_r:geom.pad_r + h, geom.pad_c:geom.pad_c + w] = images
    # (b, padded_h-ph+1, padded_w-pw+1, c, ph, pw) -> subsample by stride
    win = sliding_window_view(padded, (geom.patch_h, geom.patch_w), axis=(1, 2))
    win = win[:, ::geom.stride, ::geom.stride]
    return np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))


def accumulate_patches(patches, geom):
    """Overlap-add the patch stack back onto the image: adjoint of extract.

    (b,ch,cw,ph,pw,c) -> (b,h,w,c). Overlapping contributions are summed;
    writes outside the image are discarded.
    """
    b = patches.shape[0]
    c = patches.shape[-1]
    ph, pw, s = geom.patch_h, geom.patch_w, geom.stride
    out = np.zeros((b, geom.padded_h, geom.padded_w, c), dtype=patches.dtype)
    if ph % s == 0 and pw % s == 0:
        # Cells whose indices agree modulo patch/stride place adjacent,
        # non-overlapping patches, so each phase group lands as one reshape.
        gh, gw = ph // s, pw // s
        for pi in range(gh):
            for pj in range(gw):
                sub = patches[:, pi::gh, pj::gw]
                mi, mj = sub.shape[1], sub.shape[2]
                if mi == 0 or mj == 0:
                    continue
                block = sub.transpose(0, 1, 3, 2, 4, 5).reshape(
                    b, mi * ph, mj * pw, c)
                r0, c0 = pi * s, pj * s
                out[:, r0:r0 + mi * ph, c0:c0 + mj * pw] += block
    else:
        for i in range(geom.code_h):
            r0 = i * s
            for j in range(geom.code_w):
                c0 = j * s
                out[:, r0:r0 + ph, c0:c0 + pw] += patches[:, i, j]
    return out[:, geom.pad_r:geom.pad_r + geom.height,
               geom.pad_c:geom.pad_c + geom.width]


def correlate_batch(images, kernels, geom):
    """Inner product of every kernel with every patch: (b,h,w,c) -> (b,ch,cw,k).

    This is the adjoint of `reconstruct_batch` with respect to the code.
    """
    k = kernels.shape[0]
    flat = extract_patches(images, geom).reshape(
        -1, geom.patch_h * geom.patch_w * images.shape[-1])
    out = flat @ kernels.reshape(k, -1).T
    return out.reshape(images.shape[0], geom.code_h, geom.code_w, k)


def reconstruct_batch(codes, kernels, geom):
    """Place kernels at stride offsets weighted by the code: (b,ch,cw,k) -> image.

    Linear in the code; overlapping kernel placements are summed.
    """
    b = codes.shape[0]
    k, ph, pw, c = kernels.shape
    patches = codes.reshape(-1, k) @ kernels.reshape(k, -1)
    patches = patches.reshape(b, geom.code_h, geom.code_w, ph, pw, c)
    return accumulate_patches(patches, geom)


def kernel_gradient_batch(codes, residuals, geom, num_kernels):
    """Sum-of-(activation x residual patch) per kernel: (k,ph,pw,c).

    Adjoint of `reconstruct_batch` with respect to the kernels; sums over the
    batch and every code cell.
    """
    flat_codes = codes.reshape(-1, num_kernels)
    flat_resid = extract_patches(residuals, geom).reshape(flat_codes.shape[0], -1)
    grad = flat_codes.T @ flat_resid
    return grad.reshape(num_kernels, geom.patch_h, geom.patch_w,
                        residuals.shape[-1])
