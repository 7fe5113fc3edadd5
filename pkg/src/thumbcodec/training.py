"""Dictionary learning: stochastic gradient descent with momentum on the
full-image reconstruction error of codes inferred from kept pixels only.

Each batch is sparse-coded under the masking policy, then every atom moves
along the sum of (activation x residual patch) terms over its active
placements, with the residual taken over the whole image so the dictionary
learns to explain the omitted pixels too. Atoms are projected back to the
unit sphere after every update.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import convops, lca
from .data import Dataset
from .errors import TrainingDivergedError
from .masks import checkerboard_mask, random_mask
from .metrics import PSNR_CAP

logger = logging.getLogger(__name__)

# SeedSequence stream tags, so masks / shuffling / re-init never collide
_BATCH_MASK_STREAM = 1
_EVAL_MASK_STREAM = 2
_SHUFFLE_STREAM = 3
_REINIT_STREAM = 4


@dataclass
class TrainerConfig:
    lam: float = 0.1
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 50
    epochs: int = 2
    mask_policy: str = "checkerboard"  # or "random"
    keep_fraction: float = 0.5
    num_atoms: int = 1024
    patch_size: int = 16
    stride: int = 2
    step: float = lca.DEFAULT_STEP
    iterations: int = lca.DEFAULT_ITERATIONS
    tol: float = lca.DEFAULT_TOL
    master_seed: int = 0
    init_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.mask_policy not in ("checkerboard", "random"):
            raise ValueError(f"unknown mask policy {self.mask_policy!r}")

    def lca_params(self):
        return lca.LcaParams(lam=self.lam, step=self.step,
                             iterations=self.iterations, tol=self.tol)


@dataclass
class HistoryRow:
    epoch: int
    batch: int
    energy: float
    sparsity: float
    psnr: float


@dataclass
class SweepRow:
    lam: float
    mean_sparsity: float
    mean_psnr: float


@dataclass
class TrainState:
    dictionary: lca.Dictionary
    momentum_buffer: np.ndarray
    epoch: int = 0
    batch: int = 0
    history: list = field(default_factory=list)
    dead_atom_counts: list = field(default_factory=list)
    reinit_rng: np.random.Generator | None = None


def init_dictionary(num_atoms, patch_size, channels, seed, stride=2):
    """Seeded standard-normal atoms, each normalized to unit L2 norm.

    patch_size may be an int (square) or an (h, w) pair. Atoms are stored as
    float32; normalization runs in float64 so the stored norms stay within
    1e-6 of one.
    """
    if num_atoms < 1:
        raise ValueError(f"num_atoms must be >= 1, got {num_atoms}")
    ph, pw = (patch_size, patch_size) if np.isscalar(patch_size) else patch_size
    rng = np.random.default_rng(seed)
    atoms = rng.standard_normal((num_atoms, ph, pw, channels))
    atoms = _renormalize(atoms)
    return lca.Dictionary(atoms=atoms, stride=stride)


def _renormalize(atoms, reinit_rng=None):
    """Project every atom to the unit L2 sphere (float64 math, float32 out).

    Zero-norm atoms are redrawn from reinit_rng when given, else left zero.
    Returns the number of redrawn atoms via the second value when asked.
    """
    flat = atoms.reshape(atoms.shape[0], -1).astype(np.float64)
    norms = np.linalg.norm(flat, axis=1)
    dead = norms == 0
    if reinit_rng is not None and np.any(dead):
        flat[dead] = reinit_rng.standard_normal((int(dead.sum()), flat.shape[1]))
        norms = np.linalg.norm(flat, axis=1)
    safe = np.where(norms == 0, 1.0, norms)
    flat = flat / safe[:, None]
    return flat.reshape(atoms.shape).astype(np.float32)


def dict_gradient(img, code, dictionary):
    """Negative gradient of the half-squared full-image reconstruction error
    with respect to the atoms: for each atom, the activation-weighted sum of
    residual patches at its active placements. The residual is deliberately
    unmasked, so training explains the omitted pixels too."""
    img = np.asarray(img)
    acts = code.activations if isinstance(code, lca.SparseCode) else code
    geom = dictionary.geometry(img.shape[0], img.shape[1])
    expected = (geom.code_h, geom.code_w, dictionary.num_atoms)
    if acts.shape != expected:
        raise ValueError(f"code shape {acts.shape} does not match geometry "
                         f"{expected}")
    recon = convops.reconstruct_batch(acts[None], dictionary.atoms, geom)[0]
    resid = img - recon
    return convops.kernel_gradient_batch(acts[None], resid[None], geom,
                                         dictionary.num_atoms)


def apply_update(state, grad, config):
    """Momentum SGD step plus projection of every atom to the unit sphere.

    buffer <- momentum * buffer + grad; atoms <- atoms + lr * buffer.
    Zero-norm atoms are redrawn from the state's seeded re-init stream.
    """
    if not np.all(np.isfinite(grad)):
        raise TrainingDivergedError(
            "non-finite dictionary gradient",
            epoch=state.epoch, batch=state.batch)
    state.momentum_buffer = (config.momentum * state.momentum_buffer
                             + grad).astype(np.float32)
    atoms = (state.dictionary.atoms
             + np.float32(config.learning_rate) * state.momentum_buffer)
    state.dictionary = lca.Dictionary(
        atoms=_renormalize(atoms, state.reinit_rng),
        stride=state.dictionary.stride)
    return state


def _batch_mask_seed(master_seed, counter):
    seq = np.random.SeedSequence([int(master_seed), _BATCH_MASK_STREAM,
                                  int(counter)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def eval_mask_seed(master_seed):
    seq = np.random.SeedSequence([int(master_seed), _EVAL_MASK_STREAM])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _policy_mask(config, height, width, counter):
    if config.mask_policy == "checkerboard":
        return checkerboard_mask(height, width, phase=0)
    return random_mask(height, width, config.keep_fraction,
                       _batch_mask_seed(config.master_seed, counter))


def _batch_psnr(images, recon):
    """Mean capped PSNR of the clamped pure reconstruction, peak 1."""
    diff = images.astype(np.float64) - np.clip(recon, 0.0, 1.0).astype(np.float64)
    mse = np.mean(diff.reshape(images.shape[0], -1) ** 2, axis=1)
    with np.errstate(divide="ignore"):
        vals = np.minimum(10.0 * np.log10(1.0 / mse), PSNR_CAP)
    return float(np.mean(vals))


def train_dictionary(dataset, config):
    """Learn a dictionary over `dataset` under the configured mask policy.

    Per batch: build the mask (fresh random mask every batch, or the fixed
    checkerboard), sparse-code the batch on kept pixels, average the atom
    gradients over the batch, apply one momentum update. Batch order is a
    per-epoch seeded shuffle. Atoms inactive for a whole epoch are redrawn
    and counted. Fully deterministic given the config seeds.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    images = dataset.images
    n, h, w, c = images.shape
    dictionary = init_dictionary(config.num_atoms, config.patch_size, c,
                                 config.init_seed, stride=config.stride)
    state = TrainState(
        dictionary, np.zeros_like(dictionary.atoms, dtype=np.float32),
        reinit_rng=np.random.default_rng(
            np.random.SeedSequence([int(config.init_seed), _REINIT_STREAM])))
    shuffle_rng = np.random.default_rng(
        np.random.SeedSequence([int(config.init_seed), _SHUFFLE_STREAM]))
    params = config.lca_params()
    geom = dictionary.geometry(h, w)
    logger.info("training dictionary: %d atoms, %dx overcomplete on %dx%dx%d",
                config.num_atoms, round(dictionary.overcompleteness(h, w)),
                h, w, c)

    counter = 0
    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        active_any = np.zeros(config.num_atoms, dtype=bool)
        for b0 in range(0, n, config.batch_size):
            batch_idx = order[b0:b0 + config.batch_size]
            batch = images[batch_idx]
            mask = _policy_mask(config, h, w, counter)
            state.epoch, state.batch = epoch, counter
            acts, energies = lca.lca_encode_batch(batch, mask,
                                                  state.dictionary, params)
            recon = convops.reconstruct_batch(acts, state.dictionary.atoms,
                                              geom)
            resid = batch - recon
            grad = convops.kernel_gradient_batch(
                acts, resid, geom, config.num_atoms) / batch.shape[0]
            active_any |= np.any(acts > 0, axis=(0, 1, 2))
            apply_update(state, grad, config)
            row = HistoryRow(epoch=epoch, batch=counter,
                             energy=float(np.mean(energies[-1])),
                             sparsity=lca.sparsity(acts),
                             psnr=_batch_psnr(batch, recon))
            state.history.append(row)
            logger.debug("epoch %d batch %d energy %.4f sparsity %.4f "
                         "psnr %.2f", epoch, counter, row.energy,
                         row.sparsity, row.psnr)
            counter += 1
        dead = int(np.count_nonzero(~active_any))
        state.dead_atom_counts.append(dead)
        if dead:
            atoms = state.dictionary.atoms.copy()
            atoms[~active_any] = 0.0
            state.dictionary = lca.Dictionary(
                atoms=_renormalize(atoms, state.reinit_rng),
                stride=state.dictionary.stride)
            logger.info("epoch %d: re-initialized %d dead atoms", epoch, dead)
    return state


def sweep_lambda(dataset, lambdas, config):
    """Train one epoch per lambda (fresh identical init each time) and score
    sparsity/PSNR on a held-out batch, the dataset's final batch_size images,
    which never enter training. Rows come back sorted by lambda."""
    if len(lambdas) < 2:
        raise ValueError("need at least two lambda values to sweep")
    if len(dataset) <= config.batch_size:
        raise ValueError("dataset too small to hold out an evaluation batch")
    holdout = dataset.images[len(dataset) - config.batch_size:]
    train_ds = dataset.subset(0, len(dataset) - config.batch_size)
    h, w = holdout.shape[1:3]
    if config.mask_policy == "checkerboard":
        eval_mask = checkerboard_mask(h, w, phase=0)
    else:
        eval_mask = random_mask(h, w, config.keep_fraction,
                                eval_mask_seed(config.master_seed))
    rows = []
    for lam in lambdas:
        cfg = replace(config, lam=float(lam), epochs=1)
        state = train_dictionary(train_ds, cfg)
        acts, _ = lca.lca_encode_batch(holdout, eval_mask, state.dictionary,
                                       cfg.lca_params())
        geom = state.dictionary.geometry(h, w)
        recon = convops.reconstruct_batch(acts, state.dictionary.atoms, geom)
        rows.append(SweepRow(lam=float(lam),
                             mean_sparsity=lca.sparsity(acts),
                             mean_psnr=_batch_psnr(holdout, recon)))
        logger.info("lambda %.4g: sparsity %.4f psnr %.2f",
                    rows[-1].lam, rows[-1].mean_sparsity, rows[-1].mean_psnr)
    rows.sort(key=lambda r: r.lam)
    return rows
