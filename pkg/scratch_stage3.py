"""Staging: find a stable desk-training config after the step-0.05 blowup."""
import time

import numpy as np

from thumbcodec import training
from thumbcodec.data import Dataset
from thumbcodec.errors import SolverDivergedError
from thumbcodec.synthetic import synth_images

T0 = time.time()
images, _ = synth_images(2000, seed=200)
train = Dataset(images, None, "train")

candidates = [
    ("A: step0.02 it180 lr0.01", dict(step=0.02, iterations=180,
                                      learning_rate=0.01)),
    ("B: step0.05 it120 lr0.005", dict(step=0.05, iterations=120,
                                       learning_rate=0.005)),
    ("C: step0.03 it150 lr0.01", dict(step=0.03, iterations=150,
                                      learning_rate=0.01)),
]
for name, kw in candidates:
    cfg = training.TrainerConfig(
        lam=0.2, momentum=0.9, batch_size=50, epochs=2,
        mask_policy="checkerboard", num_atoms=256, patch_size=8, stride=2,
        tol=1e-4, master_seed=0, init_seed=0, **kw)
    t = time.time()
    try:
        state = training.train_dictionary(train, cfg)
        coher = np.abs(np.tril(
            state.dictionary.atoms.reshape(256, -1)
            @ state.dictionary.atoms.reshape(256, -1).T, k=-1)).max()
        print(f"{name}: OK in {time.time()-t:.0f}s; last psnr "
              f"{state.history[-1].psnr:.2f}, sparsity "
              f"{state.history[-1].sparsity:.4f}, max |coherence| "
              f"{coher:.3f}, dead {state.dead_atom_counts}", flush=True)
    except SolverDivergedError as exc:
        print(f"{name}: DIVERGED after {time.time()-t:.0f}s ({exc})",
              flush=True)
print(f"total {time.time()-T0:.0f}s")
