"""Training, feature-distance and accuracy measurements over interchange
directories."""

import logging
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .interchange import (InterchangeError, check_alignment, load_directory,
                          read_manifest)
from .model import SmallCnn, to_batches

logger = logging.getLogger(__name__)

BASELINE_FLOOR = 0.70


class BaselineTooWeak(RuntimeError):
    """The classifier is not good enough on original images to support
    downstream comparisons."""


@dataclass
class FeatureLossReport:
    method_tag: str
    loss1: float  # summed squared feature distance, second conv layer
    loss2: float  # same, second pool layer
    root_loss1: float | None = None  # summed unsquared distances when asked
    root_loss2: float | None = None


def train_classifier(train_dir, test_dir, seed, epochs=8, batch_size=64,
                     learning_rate=0.01, momentum=0.9):
    """Train on original images to a fixed budget and gate on baseline
    accuracy >= 70% over the original test set.

    Returns (model, baseline accuracy). Raises BaselineTooWeak below the
    floor: comparisons against a weak feature extractor are meaningless.
    """
    images, labels, tag = load_directory(train_dir)
    if labels is None:
        raise InterchangeError(f"{train_dir}: training manifest has no labels")
    torch.manual_seed(seed)
    model = SmallCnn()
    opt = torch.optim.SGD(model.parameters(), lr=learning_rate,
                          momentum=momentum)
    loss_fn = nn.CrossEntropyLoss()
    rng = np.random.default_rng(seed)
    model.train()
    for epoch in range(epochs):
        order = rng.permutation(images.shape[0])
        epoch_loss, n_batches = 0.0, 0
        for lo, batch in to_batches(images[order], batch_size):
            target = torch.from_numpy(labels[order[lo:lo + batch.shape[0]]])
            opt.zero_grad()
            out = model(batch)
            loss = loss_fn(out, target)
            loss.backward()
            opt.step()
            epoch_loss += float(loss)
            n_batches += 1
        logger.info("epoch %d: mean loss %.4f (tag %s)", epoch,
                    epoch_loss / n_batches, tag)
    model.eval()
    baseline = classify_accuracy(test_dir, model)
    if baseline < BASELINE_FLOOR:
        raise BaselineTooWeak(
            f"baseline accuracy {baseline:.3f} < {BASELINE_FLOOR}; refusing "
            "downstream comparisons")
    return model, baseline


@torch.no_grad()
def feature_loss(orig_dir, recon_dir, model, batch_size=64, with_root=False):
    """Summed squared Euclidean distances between feature maps of aligned
    original/reconstruction pairs, at the second conv and second pool
    layers."""
    check_alignment(read_manifest(orig_dir), read_manifest(recon_dir))
    orig, _, _ = load_directory(orig_dir)
    recs, _, tag = load_directory(recon_dir)
    model.eval()
    loss1 = loss2 = 0.0
    root1 = root2 = 0.0
    rec_batches = to_batches(recs, batch_size)
    for (_, a), (_, b) in zip(to_batches(orig, batch_size), rec_batches):
        fa1, fa2 = model.features(a)
        fb1, fb2 = model.features(b)
        d1 = (fa1 - fb1).flatten(1)
        d2 = (fa2 - fb2).flatten(1)
        sq1 = (d1 * d1).sum(dim=1)
        sq2 = (d2 * d2).sum(dim=1)
        loss1 += float(sq1.sum())
        loss2 += float(sq2.sum())
        if with_root:
            root1 += float(sq1.sqrt().sum())
            root2 += float(sq2.sqrt().sum())
    return FeatureLossReport(tag, loss1, loss2,
                             root_loss1=root1 if with_root else None,
                             root_loss2=root2 if with_root else None)


@torch.no_grad()
def classify_accuracy(recon_dir, model, batch_size=64):
    """Top-1 accuracy of the model over a labeled interchange directory."""
    images, labels, _ = load_directory(recon_dir)
    if labels is None:
        raise InterchangeError(f"{recon_dir}: manifest has no labels")
    model.eval()
    hits = 0
    for lo, batch in to_batches(images, batch_size):
        pred = model(batch).argmax(dim=1).numpy()
        hits += int((pred == labels[lo:lo + batch.shape[0]]).sum())
    return hits / images.shape[0]
