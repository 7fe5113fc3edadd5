"""Staging: desk-scale Table-I ordering trial on 5000+500 synthetic images."""
import time

import numpy as np

from thumbcodec import codec, lca, metrics, training
from thumbcodec.autoencoder import AeConfig, ae_forward, train_autoencoder
from thumbcodec.data import Dataset
from thumbcodec.synthetic import synth_images

T0 = time.time()


def log(msg):
    print(f"[{time.time()-T0:7.0f}s] {msg}", flush=True)


images, labels = synth_images(5500, seed=200)
train = Dataset(images[:5000], labels[:5000], "train")
held = images[5000:]
log(f"corpus ready: {len(train)} train / {len(held)} held-out")

LAM = 0.2
dicts = {}
for policy in ("checkerboard", "random"):
    cfg = training.TrainerConfig(
        lam=LAM, learning_rate=0.01, momentum=0.9, batch_size=50, epochs=2,
        mask_policy=policy, num_atoms=256, patch_size=8, stride=2,
        step=0.02, iterations=180, tol=1e-4, master_seed=0, init_seed=0)
    state = training.train_dictionary(train, cfg)
    dicts[policy] = state.dictionary
    log(f"dict[{policy}] trained; last-batch psnr "
        f"{state.history[-1].psnr:.2f}, sparsity "
        f"{state.history[-1].sparsity:.4f}, dead {state.dead_atom_counts}")

ae_cfg = AeConfig(epochs=2, init_seed=0)
ae_params = train_autoencoder(train, ae_cfg)
log(f"ae trained; first loss {ae_params.loss_history[0][2]:.1f}, "
    f"last loss {ae_params.loss_history[-1][2]:.1f}")

eval_params = lca.LcaParams(lam=LAM, step=0.05, iterations=300, tol=1e-5)


def sc_recons(policy):
    out = np.empty_like(held)
    for i, img in enumerate(held):
        seed = int(np.random.SeedSequence([123, 7, i]).generate_state(
            1, dtype=np.uint64)[0])
        comp = codec.compress(img, policy, seed=seed)
        out[i] = codec.decompress(comp, dicts[policy], eval_params)
    return out


reports = []
for policy in ("checkerboard", "random"):
    t = time.time()
    recs = sc_recons(policy)
    reports.append(metrics.evaluate_dataset(held, recs, f"sc-{policy}"))
    log(f"sc-{policy} eval done in {time.time()-t:.0f}s")

ae_recs = np.stack([np.clip(ae_forward(ae_params, img)[1], 0, 1)
                    for img in held])
reports.append(metrics.evaluate_dataset(held, ae_recs, "bottleneck-ae"))
log("ae eval done")

print()
print(metrics.format_report_table(reports))
