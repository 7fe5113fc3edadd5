"""Command-line interface.

Subcommands: train-dict, train-ae, sweep-lambda, compress, decompress,
ae-roundtrip, evaluate, export-recons, make-synthetic. Every report path
writes a CSV and a rendered figure next to it. A key=value config file
(--config) supplies defaults for any long flag; explicit flags win. All
stochastic behavior is pinned by --seed. Exit codes: 0 success, 1 runtime
failure (message on stderr), 2 usage errors.
"""

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import codec, figures, metrics, synthetic, training
from .autoencoder import AeConfig, ae_forward, train_autoencoder
from .data import Dataset, load_cifar10
from .lca import LcaParams
from .masks import CHECKERBOARD

logger = logging.getLogger(__name__)


def _read_config_file(path):
    values = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_defaults(parser, argv):
    """Pre-parse --config and turn its entries into subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    raw = _read_config_file(known.config)
    subparsers = [parser] + [
        choice for action in parser._actions
        if isinstance(action, argparse._SubParsersAction)
        for choice in action.choices.values()]
    for sub in subparsers:
        defaults = {}
        for action in sub._actions:
            # a key may name either the dest or the long flag (--lambda)
            keys = {action.dest} | {
                opt.lstrip("-").replace("-", "_")
                for opt in action.option_strings if opt.startswith("--")}
            hits = keys & raw.keys()
            if not hits:
                continue
            value = raw[sorted(hits)[0]]
            if action.type is not None:
                value = action.type(value)
            elif isinstance(action.const, bool) or isinstance(
                    action.default, bool):
                value = value.lower() in ("1", "true", "yes", "on")
            defaults[action.dest] = value
        if defaults:
            sub.set_defaults(**defaults)


def _parallel_map(fn, items, threads):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _image_seed(master_seed, index):
    seq = np.random.SeedSequence([int(master_seed), 7, int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _add_common(p):
    p.add_argument("--config", help="key=value file of flag defaults")
    p.add_argument("--seed", type=int, default=0,
                   help="master seed for all stochastic behavior")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for per-image batch operations")
    p.add_argument("--verbose", action="store_true")


def _add_trainer_flags(p):
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--count", type=int, default=0,
                   help="limit to the first N images (0 = all)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--mask", choices=["checkerboard", "random"],
                   default="checkerboard")
    p.add_argument("--atoms", type=int, default=1024)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--stride", type=int, default=2)
    p.add_argument("--lca-step", type=float, default=0.05)
    p.add_argument("--lca-iterations", type=int, default=400)
    p.add_argument("--lca-tol", type=float, default=1e-5)


def _load_subset(args):
    ds = load_cifar10(args.data_dir, args.split)
    if args.count:
        ds = ds.subset(0, args.count)
    return ds


def _trainer_config(args):
    return training.TrainerConfig(
        lam=args.lam, learning_rate=args.lr, momentum=args.momentum,
        batch_size=args.batch_size, epochs=args.epochs,
        mask_policy=args.mask, num_atoms=args.atoms, patch_size=args.patch,
        stride=args.stride, step=args.lca_step,
        iterations=args.lca_iterations, tol=args.lca_tol,
        master_seed=args.seed, init_seed=args.seed)


def _write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "batch", "energy", "sparsity", "psnr"])
        for r in history:
            writer.writerow([r.epoch, r.batch, repr(r.energy),
                             repr(r.sparsity), repr(r.psnr)])


def cmd_train_dict(args):
    ds = _load_subset(args)
    config = _trainer_config(args)
    state = training.train_dictionary(ds, config)
    codec.save_dictionary(state.dictionary, args.out, lam=args.lam)
    h, w = ds.images.shape[1:3]
    print(f"trained {config.num_atoms} atoms "
          f"({state.dictionary.overcompleteness(h, w):.1f}x overcomplete); "
          f"dead atoms per epoch: {state.dead_atom_counts}")
    if args.history:
        _write_history_csv(state.history, args.history)
        figures.save_dict_training_curves(
            state.history, os.path.splitext(args.history)[0] + ".png")
    if args.mosaic:
        figures.save_dictionary_mosaic(state.dictionary, args.mosaic)
    return 0


def cmd_train_ae(args):
    ds = _load_subset(args)
    config = AeConfig(kernel=args.ae_kernel, stride=args.ae_stride,
                      out_channels=args.ae_channels, learning_rate=args.lr,
                      momentum=args.momentum, batch_size=args.batch_size,
                      epochs=args.epochs, init_seed=args.seed,
                      tied=args.tied_weights)
    params = train_autoencoder(ds, config)
    codec.save_autoencoder(params, args.out)
    print(f"trained autoencoder: code {params.code_size} values for "
          f"{params.input_size} inputs "
          f"({params.input_size / params.code_size:.1f}:1)")
    if args.history:
        with open(args.history, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "batch", "loss"])
            for epoch, batch, loss in params.loss_history:
                writer.writerow([epoch, batch, repr(loss)])
        figures.save_ae_training_curve(
            params.loss_history, os.path.splitext(args.history)[0] + ".png")
    return 0


def cmd_sweep_lambda(args):
    ds = _load_subset(args)
    config = _trainer_config(args)
    lambdas = [float(v) for v in args.lambdas.split(",")]
    rows = training.sweep_lambda(ds, lambdas, config)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "mean_sparsity", "mean_psnr"])
        for r in rows:
            writer.writerow([repr(r.lam), repr(r.mean_sparsity),
                             repr(r.mean_psnr)])
    figures.save_sweep_curve(rows, os.path.splitext(args.out)[0] + ".png")
    for r in rows:
        print(f"lambda {r.lam:g}: sparsity {r.mean_sparsity:.4f} "
              f"psnr {r.mean_psnr:.3f}")
    return 0


def cmd_compress(args):
    ds = load_cifar10(args.data_dir, args.split)
    img = ds.images[args.index]
    comp = codec.compress(img, args.mask,
                          seed=_image_seed(args.seed, args.index))
    codec.save_compressed(comp, args.out)
    print(f"{args.out}: payload {len(comp.payload)} bytes of "
          f"{comp.raw_bytes()} raw ({comp.payload_ratio():.3f} payload "
          f"ratio, {comp.total_ratio():.3f} with header)")
    return 0


def cmd_decompress(args):
    comp = codec.load_compressed(args.infile)
    dictionary, lam = codec.load_dictionary(args.dict)
    params = LcaParams(lam=args.lam if args.lam else lam or 0.1,
                       step=args.lca_step, iterations=args.lca_iterations,
                       tol=args.lca_tol)
    img = codec.decompress(comp, dictionary, params,
                           overwrite_kept=not args.pure_reconstruction)
    codec.save_tensor(img, args.out)
    if args.png:
        import matplotlib.pyplot as plt
        plt.imsave(args.png, np.clip(img, 0, 1))
    print(f"reconstructed {comp.height}x{comp.width}x{comp.channels} "
          f"-> {args.out}")
    return 0


def cmd_ae_roundtrip(args):
    ds = load_cifar10(args.data_dir, args.split)
    params = codec.load_autoencoder(args.ae)
    img = ds.images[args.index]
    code, recon = ae_forward(params, img)
    recon = np.clip(recon, 0.0, 1.0)
    codec.save_tensor(recon, args.out)
    print(f"code {code.size} values; psnr "
          f"{metrics.psnr(img, recon):.3f} dB")
    return 0


def _load_manifest_dataset(directory):
    rows = codec.read_manifest(os.path.join(directory, "manifest.csv"))
    images = np.stack([codec.load_tensor(os.path.join(directory, name))
                       for name, _, _ in rows])
    labels = None
    if all(label is not None for _, label, _ in rows):
        labels = np.array([label for _, label, _ in rows], dtype=np.uint8)
    tag = rows[0][2] if rows else "unknown"
    return Dataset(images, labels, split="export"), tag


def cmd_evaluate(args):
    originals, _ = _load_manifest_dataset(args.originals)
    reports = []
    for recon_dir in args.recons:
        recons, tag = _load_manifest_dataset(recon_dir)
        reports.append(metrics.evaluate_dataset(originals, recons, tag))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method_tag", "mean_psnr", "mean_ssim", "images"])
        for r in reports:
            writer.writerow([r.method_tag, repr(r.mean_psnr),
                             repr(r.mean_ssim), len(r.per_image)])
    for r in reports:
        r.to_csv(os.path.splitext(args.out)[0] + f".{r.method_tag}.csv")
    figures.save_quality_figure(reports,
                                os.path.splitext(args.out)[0] + ".png")
    print(metrics.format_report_table(reports))
    return 0


def cmd_export_recons(args):
    ds = load_cifar10(args.data_dir, args.split)
    if args.count:
        ds = ds.subset(args.offset, args.offset + args.count)
    elif args.offset:
        ds = ds.subset(args.offset, len(ds))
    images = ds.images
    if args.method == "original":
        recs = images.astype(np.float32)
    elif args.method == "ae":
        params = codec.load_autoencoder(args.ae)

        def roundtrip(img):
            return np.clip(ae_forward(params, img)[1], 0.0, 1.0)

        recs = np.stack(_parallel_map(roundtrip, images, args.threads))
    else:  # sparse coding
        dictionary, lam = codec.load_dictionary(args.dict)
        params = LcaParams(lam=args.lam if args.lam else lam or 0.1,
                           step=args.lca_step,
                           iterations=args.lca_iterations, tol=args.lca_tol)

        def roundtrip(item):
            i, img = item
            comp = codec.compress(img, args.mask,
                                  seed=_image_seed(args.seed, i))
            return codec.decompress(
                comp, dictionary, params,
                overwrite_kept=not args.pure_reconstruction)

        recs = np.stack(_parallel_map(roundtrip, list(enumerate(images)),
                                      args.threads))
    tag = args.tag or args.method
    codec.export_tensors(recs, ds.labels, tag, args.out_dir)
    if args.fig:
        figures.save_reconstruction_grid(images, recs, args.fig)
    print(f"exported {len(recs)} images to {args.out_dir} (tag {tag})")
    return 0


def cmd_make_synthetic(args):
    synthetic.make_synthetic_dataset(args.out_dir, args.train_count,
                                     args.test_count, seed=args.seed)
    print(f"wrote synthetic corpus to {args.out_dir} "
          f"({args.train_count} train / {args.test_count} test)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="thumbcodec",
        description="Thumbnail compression: sparse coding vs. a bottleneck "
                    "autoencoder.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-dict", help="learn a convolutional dictionary")
    _add_common(p)
    _add_trainer_flags(p)
    p.add_argument("--out", required=True, help="dictionary checkpoint path")
    p.add_argument("--history", help="training history CSV (+ figure)")
    p.add_argument("--mosaic", help="atom mosaic figure path")
    p.set_defaults(func=cmd_train_dict)

    p = sub.add_parser("train-ae", help="train the bottleneck autoencoder")
    _add_common(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=["train", "test"], default="train")
    p.add_argument("--count", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--ae-kernel", type=int, default=8)
    p.add_argument("--ae-stride", type=int, default=4)
    p.add_argument("--ae-channels", type=int, default=24)
    p.add_argument("--tied-weights", action="store_true")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--history", help="loss history CSV (+ figure)")
    p.set_defaults(func=cmd_train_ae)

    p = sub.add_parser("sweep-lambda",
                       help="one-epoch training per lambda, sparsity/PSNR "
                            "table")
    _add_common(p)
    _add_trainer_flags(p)
    p.add_argument("--lambdas", required=True,
                   help="comma-separated lambda values")
    p.add_argument("--out", required=True, help="sweep CSV path (+ figure)")
    p.set_defaults(func=cmd_sweep_lambda)

    p = sub.add_parser("compress", help="compress one image to a file")
    _add_common(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--mask", choices=["checkerboard", "random"],
                   default="checkerboard")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress",
                       help="reconstruct a compressed image with a "
                            "dictionary")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--dict", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0,
                   help="override the dictionary's training lambda")
    p.add_argument("--lca-step", type=float, default=0.05)
    p.add_argument("--lca-iterations", type=int, default=400)
    p.add_argument("--lca-tol", type=float, default=1e-5)
    p.add_argument("--pure-reconstruction", action="store_true",
                   help="do not overwrite kept pixels with stored values")
    p.add_argument("--out", required=True, help="output tensor path")
    p.add_argument("--png", help="optional preview image")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("ae-roundtrip",
                       help="compress + decompress one image through the "
                            "autoencoder")
    _add_common(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--ae", required=True, help="autoencoder checkpoint")
    p.add_argument("--out", required=True, help="output tensor path")
    p.set_defaults(func=cmd_ae_roundtrip)

    p = sub.add_parser("evaluate",
                       help="PSNR/SSIM report for exported reconstructions")
    _add_common(p)
    p.add_argument("--originals", required=True,
                   help="interchange directory of original images")
    p.add_argument("--recons", nargs="+", required=True,
                   help="interchange directories, one per method")
    p.add_argument("--out", required=True, help="summary CSV path (+ figure)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-recons",
                       help="write reconstructed images + labels in the "
                            "interchange format")
    _add_common(p)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--count", type=int, default=0)
    p.add_argument("--method", choices=["original", "sc", "ae"],
                   required=True)
    p.add_argument("--mask", choices=["checkerboard", "random"],
                   default="checkerboard")
    p.add_argument("--dict", help="dictionary checkpoint (method=sc)")
    p.add_argument("--ae", help="autoencoder checkpoint (method=ae)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--lca-step", type=float, default=0.05)
    p.add_argument("--lca-iterations", type=int, default=400)
    p.add_argument("--lca-tol", type=float, default=1e-5)
    p.add_argument("--pure-reconstruction", action="store_true")
    p.add_argument("--tag", help="method tag for the manifest")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--fig", help="optional sample grid figure")
    p.set_defaults(func=cmd_export_recons)

    p = sub.add_parser("make-synthetic",
                       help="write a synthetic corpus in the CIFAR-10 "
                            "binary layout")
    _add_common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-count", type=int, default=5000)
    p.add_argument("--test-count", type=int, default=1000)
    p.set_defaults(func=cmd_make_synthetic)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    _apply_config_defaults(parser, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "export-recons":
        if args.method == "sc" and not args.dict:
            parser.error("--dict is required with --method sc")
        if args.method == "ae" and not args.ae:
            parser.error("--ae is required with --method ae")
    try:
        return args.func(args)
    except Exception as exc:  # surface as exit 1 with a diagnostic
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
