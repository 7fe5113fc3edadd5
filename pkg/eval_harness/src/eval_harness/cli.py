"""Harness CLI: train / feature-loss / accuracy over interchange directories.

Every command writes the same JSON report shape
{method_tag, loss1, loss2, accuracy, baseline}, filling the fields it
measured and leaving the rest null. Exit codes: 0 success, 1 runtime failure
(diagnostic on stderr), 2 usage errors.
"""

import argparse
import json
import logging
import sys

from .harness import (classify_accuracy, feature_loss, train_classifier)
from .model import load_model, save_model


def _write_report(path, **fields):
    report = {"method_tag": None, "loss1": None, "loss2": None,
              "accuracy": None, "baseline": None}
    report.update(fields)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def cmd_train(args):
    baselines = []
    for run in range(args.runs):
        seed = args.seed + run
        model, baseline = train_classifier(
            args.train_manifest, args.test_manifest, seed,
            epochs=args.epochs, batch_size=args.batch_size,
            learning_rate=args.lr, momentum=args.momentum)
        out = args.out if args.runs == 1 else \
            args.out.replace(".pt", f".s{seed}.pt")
        save_model(model, out, seed, baseline)
        baselines.append(baseline)
        print(f"seed {seed}: baseline accuracy {baseline:.4f} -> {out}")
    if args.report:
        _write_report(args.report, method_tag="original",
                      baseline=sum(baselines) / len(baselines))
    return 0


def cmd_feature_loss(args):
    model, _, baseline = load_model(args.model)
    rep = feature_loss(args.originals, args.recons, model,
                       with_root=args.root)
    fields = {"method_tag": rep.method_tag, "loss1": rep.loss1,
              "loss2": rep.loss2, "baseline": baseline}
    if args.root:
        fields["root_loss1"] = rep.root_loss1
        fields["root_loss2"] = rep.root_loss2
    report = _write_report(args.out, **fields)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_accuracy(args):
    accs, baselines, tag = [], [], None
    for path in args.model:
        model, _, baseline = load_model(path)
        accs.append(classify_accuracy(args.recons, model))
        baselines.append(baseline)
    from .interchange import load_directory

    _, _, tag = load_directory(args.recons)
    report = _write_report(
        args.out, method_tag=tag, accuracy=sum(accs) / len(accs),
        baseline=sum(baselines) / len(baselines))
    report["per_model"] = accs
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="eval-harness",
        description="Feature-level evaluation of reconstructed thumbnails.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the classifier on originals")
    p.add_argument("--train-manifest", required=True,
                   help="interchange dir of original training images")
    p.add_argument("--test-manifest", required=True,
                   help="interchange dir of original test images (baseline)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=1,
                   help="train N models with seeds seed..seed+N-1")
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--out", required=True, help="model checkpoint path (.pt)")
    p.add_argument("--report", help="optional JSON report path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("feature-loss",
                       help="summed squared feature distances vs originals")
    p.add_argument("--originals", required=True)
    p.add_argument("--recons", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--root", action="store_true",
                   help="also report unsquared (root) distances")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_feature_loss)

    p = sub.add_parser("accuracy",
                       help="top-1 accuracy of reconstructions, averaged "
                            "over the given models")
    p.add_argument("--recons", required=True)
    p.add_argument("--model", nargs="+", required=True,
                   help="one or more classifier checkpoints")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_accuracy)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
