"""Staging: lambda sweep calibration on 1000 synthetic images, K=256."""
import time

import numpy as np

from thumbcodec.data import Dataset
from thumbcodec.synthetic import synth_images
from thumbcodec import training

t0 = time.time()
images, _ = synth_images(1050, seed=100)
ds = Dataset(images, None, "train")
cfg = training.TrainerConfig(
    lam=0.1, learning_rate=0.01, momentum=0.9, batch_size=50, epochs=1,
    mask_policy="checkerboard", num_atoms=256, patch_size=8, stride=2,
    iterations=120, tol=1e-4, master_seed=0, init_seed=0)
rows = training.sweep_lambda(ds, [0.1, 0.2, 0.3, 0.5, 0.8], cfg)
for r in rows:
    print(f"lam={r.lam:<5g} sparsity={r.mean_sparsity:.4f} "
          f"psnr={r.mean_psnr:.2f}", flush=True)
print(f"stage1 took {time.time()-t0:.0f}s", flush=True)
