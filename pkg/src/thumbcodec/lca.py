"""Convolutional rectifying LCA: sparse inference over a learned dictionary.

Given an image, a keep-mask and a bank of unit-norm convolutional atoms, the
solver finds non-negative activations minimizing

    1/2 * sum_kept (image - recon)^2  +  lambda * sum(activations)

where recon places atoms at stride offsets (see `convops` for the geometry)
and the squared error ranges only over mask-kept pixel positions. Inference
integrates leaky membrane potentials

    u <- u + step * (correlate(mask * (image - recon)) - u + a)
    a  = max(u - lambda, 0)

from u = 0. Fixed points satisfy the KKT conditions of the masked
non-negative-lasso objective, so intensity values at omitted pixels can never
influence the result.
"""

from dataclasses import dataclass, field

import numpy as np

from . import convops
from .errors import SolverDivergedError

DEFAULT_STEP = 0.05
DEFAULT_ITERATIONS = 400
DEFAULT_TOL = 1e-5

# energy must grow by >10% on this many consecutive steps to call divergence
_DIVERGENCE_GROWTH = 1.1
_DIVERGENCE_STEPS = 5

# energy must be tol-stable this many consecutive steps before stopping
_STABLE_PATIENCE = 5


@dataclass
class Dictionary:
    """Bank of convolutional atoms, each (patch_h, patch_w, channels), with
    unit L2 norm per atom after any training step."""

    atoms: np.ndarray  # (k, patch_h, patch_w, channels)
    stride: int

    @property
    def num_atoms(self):
        return self.atoms.shape[0]

    @property
    def patch_shape(self):
        return self.atoms.shape[1:3]

    @property
    def channels(self):
        return self.atoms.shape[3]

    def geometry(self, height, width):
        ph, pw = self.patch_shape
        return convops.patch_geometry(height, width, ph, pw, self.stride)

    def code_shape(self, height, width):
        g = self.geometry(height, width)
        return (g.code_h, g.code_w, self.num_atoms)

    def overcompleteness(self, height, width, channels=None):
        """Code coefficients per input value under this geometry."""
        c = self.channels if channels is None else channels
        ch, cw, k = self.code_shape(height, width)
        return ch * cw * k / (height * width * c)

    def atom_norms(self):
        flat = self.atoms.reshape(self.num_atoms, -1).astype(np.float64)
        return np.linalg.norm(flat, axis=1)


@dataclass
class LcaParams:
    """Solver knobs: lam is the sparsity/error tradeoff, step the Euler step
    of the membrane dynamics, tol the relative-energy-change stop."""

    lam: float
    step: float = DEFAULT_STEP
    iterations: int = DEFAULT_ITERATIONS
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if not 0.0 < self.step <= 1.0:
            raise ValueError(f"step must be in (0, 1], got {self.step}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


@dataclass
class SparseCode:
    """Non-negative activation grid (code_h, code_w, k) plus the lambda that
    produced it. energy_history tracks the objective per solver iteration."""

    activations: np.ndarray
    lam: float
    energy_history: list = field(default_factory=list)


def threshold(u, lam):
    """Rectified soft threshold max(u - lam, 0)."""
    return np.maximum(u - lam, 0.0)


def sparsity(code):
    """Fraction of strictly positive activations."""
    acts = code.activations if isinstance(code, SparseCode) else code
    return float(np.count_nonzero(acts > 0) / acts.size)


def reconstruct(dictionary, code, out_hw):
    """Sum of activation-weighted atoms at their stride offsets; linear in
    the code. out_hw is the (height, width) of the target image."""
    acts = code.activations if isinstance(code, SparseCode) else code
    h, w = out_hw
    geom = dictionary.geometry(h, w)
    expected = (geom.code_h, geom.code_w, dictionary.num_atoms)
    if acts.shape != expected:
        raise ValueError(
            f"code shape {acts.shape} inconsistent with dictionary geometry "
            f"{expected} for a {h}x{w} image")
    out = convops.reconstruct_batch(acts[None], dictionary.atoms, geom)
    return out[0]


def correlate(dictionary, img):
    """Adjoint of `reconstruct`: per-cell inner products of atoms with image
    patches (zero-padded at the border)."""
    img = np.asarray(img)
    geom = dictionary.geometry(img.shape[0], img.shape[1])
    return convops.correlate_batch(img[None], dictionary.atoms, geom)[0]


def _mask_plane(mask, shape, dtype):
    """(h, w) float 0/1 plane from a PixelMask, bool array, or None (all 1)."""
    if mask is None:
        return np.ones(shape[:2], dtype=dtype)
    kept = mask if isinstance(mask, np.ndarray) else mask.kept
    if kept.shape != shape[:2]:
        raise ValueError(
            f"mask {kept.shape} does not match image spatial dims {shape[:2]}")
    return kept.astype(dtype)


def energy(img, mask, dictionary, code, lam):
    """Masked objective: half squared error over kept pixels plus lam * L1."""
    img = np.asarray(img)
    acts = code.activations if isinstance(code, SparseCode) else code
    recon = reconstruct(dictionary, acts, img.shape[:2])
    keep = _mask_plane(mask, img.shape, img.dtype)
    resid = (img - recon) * keep[:, :, None]
    return float(0.5 * np.sum(resid.astype(np.float64) ** 2)
                 + lam * np.sum(np.abs(acts.astype(np.float64))))


def lca_encode_batch(images, mask, dictionary, params):
    """Run the LCA dynamics on a batch sharing one mask.

    images: (b, h, w, c); mask: PixelMask, (h, w) bool array, or None for all
    kept. Returns (activations (b, ch, cw, k), energies (iters+1, b) float64).
    Stops early once every image's relative energy change drops below
    params.tol. Raises SolverDivergedError if any image's energy grows by
    more than 10% on 5 consecutive steps.
    """
    images = np.asarray(images)
    b, h, w, c = images.shape
    if c != dictionary.channels:
        raise ValueError(
            f"image has {c} channels, dictionary expects {dictionary.channels}")
    geom = dictionary.geometry(h, w)
    atoms = dictionary.atoms
    if atoms.dtype != images.dtype:
        atoms = atoms.astype(images.dtype)
    keep = _mask_plane(mask, (h, w), images.dtype)[None, :, :, None]
    masked_images = images * keep

    lam = images.dtype.type(params.lam)
    step = images.dtype.type(params.step)
    u = np.zeros((b, geom.code_h, geom.code_w, dictionary.num_atoms),
                 dtype=images.dtype)
    a = np.zeros_like(u)
    resid = np.empty_like(masked_images)
    energies = np.empty((params.iterations + 1, b), dtype=np.float64)
    growth_streak = np.zeros(b, dtype=np.int32)

    def masked_energy():
        flat = resid.reshape(b, -1)
        sq = np.einsum("ij,ij->i", flat, flat, dtype=np.float64)
        return 0.5 * sq + float(lam) * np.sum(a.reshape(b, -1), axis=1,
                                              dtype=np.float64)

    n_done = 0
    converged = False
    stable_streak = 0
    for it in range(params.iterations):
        recon = convops.reconstruct_batch(a, atoms, geom)
        np.multiply(recon, keep, out=resid)
        np.subtract(masked_images, resid, out=resid)
        e = masked_energy()
        energies[it] = e
        n_done = it + 1
        if it > 0:
            prev = energies[it - 1]
            growth_streak = np.where(e > _DIVERGENCE_GROWTH * prev,
                                     growth_streak + 1, 0)
            if np.any(growth_streak >= _DIVERGENCE_STEPS):
                bad = int(np.argmax(growth_streak))
                raise SolverDivergedError(
                    f"energy grew >10% for {_DIVERGENCE_STEPS} consecutive "
                    f"steps (batch item {bad}, iteration {it}); decrease the "
                    f"integration step (currently {params.step})")
            if np.all(np.abs(e - prev) < params.tol * (1.0 + np.abs(prev))):
                stable_streak += 1
            else:
                stable_streak = 0
        du = convops.correlate_batch(resid, atoms, geom)
        du -= u
        du += a
        du *= step
        if params.tol > 0 and stable_streak >= _STABLE_PATIENCE:
            # an energy plateau is ambiguous for an all-zero code: the
            # potentials may still be integrating toward their first
            # threshold crossing, so those images must also settle in u
            zero_code = ~np.any(a.reshape(b, -1) > 0, axis=1)
            if not np.any(zero_code):
                converged = True
            else:
                flat = np.abs(du).reshape(b, -1).max(axis=1)
                scale = 1.0 + np.abs(u).reshape(b, -1).max(axis=1)
                converged = bool(np.all(
                    flat[zero_code] < params.tol * scale[zero_code]))
            if converged:
                break  # energies[it] already describes the current code
        u += du
        np.subtract(u, lam, out=a)
        np.maximum(a, 0.0, out=a)

    if converged:
        return a, energies[:n_done]
    # one more evaluation: the loop's last energy predates the final update
    recon = convops.reconstruct_batch(a, atoms, geom)
    np.multiply(recon, keep, out=resid)
    np.subtract(masked_images, resid, out=resid)
    energies[n_done] = masked_energy()
    return a, energies[:n_done + 1]


def lca_encode(img, mask, dictionary, params):
    """Sparse-code one image on its kept pixels. Deterministic: potentials
    start at zero, no warm starts."""
    img = np.asarray(img)
    acts, energies = lca_encode_batch(img[None], mask, dictionary, params)
    return SparseCode(acts[0], params.lam, energy_history=list(energies[:, 0]))
