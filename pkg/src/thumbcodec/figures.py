"""Report figures rendered next to every CSV the CLI writes."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_dict_training_curves(history, path):
    """Energy / sparsity / PSNR per batch from dictionary training."""
    batches = [r.batch for r in history]
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    axes[0].plot(batches, [r.energy for r in history], color="tab:blue")
    axes[0].set_ylabel("batch energy")
    axes[1].plot(batches, [r.sparsity for r in history], color="tab:orange")
    axes[1].set_ylabel("active fraction")
    axes[2].plot(batches, [r.psnr for r in history], color="tab:green")
    axes[2].set_ylabel("PSNR (dB)")
    axes[2].set_xlabel("batch")
    fig.suptitle("dictionary training")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ae_training_curve(loss_history, path):
    """Reconstruction loss per batch from autoencoder training."""
    batches = [b for _, b, _ in loss_history]
    losses = [l for _, _, l in loss_history]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(batches, losses, color="tab:red")
    ax.set_xlabel("batch")
    ax.set_ylabel("batch loss")
    ax.set_title("autoencoder training")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_sweep_curve(rows, path):
    """PSNR against code sparsity, one point per lambda."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    xs = [r.mean_sparsity for r in rows]
    ys = [r.mean_psnr for r in rows]
    ax.plot(xs, ys, "o-", color="tab:blue")
    for r in rows:
        ax.annotate(f"λ={r.lam:g}", (r.mean_sparsity, r.mean_psnr),
                    textcoords="offset points", xytext=(6, 4), fontsize=8)
    ax.set_xlabel("fraction of active units")
    ax.set_ylabel("PSNR (dB)")
    ax.set_title("sparsity / quality tradeoff")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_quality_figure(reports, path):
    """Mean PSNR and SSIM per method, plus per-image scatter."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4.2))
    tags = [r.method_tag for r in reports]
    x = np.arange(len(reports))
    ax1.bar(x - 0.2, [r.mean_psnr for r in reports], width=0.4,
            color="tab:blue", label="PSNR (dB)")
    ax1.set_xticks(x, tags, rotation=15, ha="right")
    ax1.set_ylabel("PSNR (dB)", color="tab:blue")
    twin = ax1.twinx()
    twin.bar(x + 0.2, [r.mean_ssim for r in reports], width=0.4,
             color="tab:orange", label="SSIM")
    twin.set_ylabel("SSIM", color="tab:orange")
    twin.set_ylim(0, 1.05)
    ax1.set_title("mean reconstruction quality")
    for rep in reports:
        pts = np.array([(min(p, 100.0), s) for p, s in rep.per_image])
        ax2.scatter(pts[:, 0], pts[:, 1], s=6, alpha=0.5,
                    label=rep.method_tag)
    ax2.set_xlabel("per-image PSNR (dB)")
    ax2.set_ylabel("per-image SSIM")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_dictionary_mosaic(dictionary, path, max_atoms=144):
    """Grid of atoms, each rescaled to [0, 1] for display."""
    atoms = dictionary.atoms[:max_atoms]
    k = atoms.shape[0]
    cols = int(np.ceil(np.sqrt(k)))
    rows = int(np.ceil(k / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(cols, rows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes:
        ax.axis("off")
    for ax, atom in zip(axes, atoms):
        lo, hi = atom.min(), atom.max()
        scale = hi - lo if hi > lo else 1.0
        ax.imshow((atom - lo) / scale)
    fig.suptitle(f"first {k} of {dictionary.num_atoms} atoms")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_reconstruction_grid(originals, recons, path, max_images=8):
    """Side-by-side originals (top) and reconstructions (bottom)."""
    n = min(len(originals), max_images)
    fig, axes = plt.subplots(2, n, figsize=(1.2 * n, 2.6))
    axes = np.atleast_2d(axes)
    for i in range(n):
        axes[0, i].imshow(np.clip(originals[i], 0, 1))
        axes[1, i].imshow(np.clip(recons[i], 0, 1))
        axes[0, i].axis("off")
        axes[1, i].axis("off")
    axes[0, 0].set_title("original", fontsize=8, loc="left")
    axes[1, 0].set_title("reconstruction", fontsize=8, loc="left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
