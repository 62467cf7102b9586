"""Command-line front end: each pipeline stage as a file-to-file subcommand.

Exit codes: 0 success, 1 usage error, 2 data or numeric error. Every
randomized subcommand requires an explicit --seed; no environment variable
is ever consulted for seeding. All outputs are written atomically.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import net, resample
from .dataset import (Dataset, ImbalanceSpec, SyntheticSpec, load_csv,
                      make_synthetic, save_csv, synthesize_imbalanced)
from .errors import DataError, NumericError
from .experiment import (emit_report, emit_tables, load_config, run_campaign,
                         train_stage1)
from .metrics import confusion, score
from .net import NetworkSpec, TrainConfig
from .rng import Stream
from .resample import STRATEGY_CLI_NAMES, parse_strategy


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        values = tuple(int(p) for p in text.split(",") if p.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _atomic(path, write_fn):
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _write_json(path, doc):
    def write(tmp):
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(doc, sort_keys=True) + "\n")
    _atomic(path, write)


def _cmd_gen_data(args):
    spec = SyntheticSpec(args.classes, args.per_class, args.dims, args.spread, args.seed)
    data = make_synthetic(spec)
    _atomic(args.out, lambda tmp: save_csv(data, tmp))
    print(f"wrote {data.n_samples} samples x {data.n_dims} dims to {args.out}")
    return 0


def _cmd_imbalance(args):
    data = load_csv(args.input)
    spec = ImbalanceSpec(args.minors, args.factor)
    out = synthesize_imbalanced(data, spec, Stream(args.seed))
    _atomic(args.out, lambda tmp: save_csv(out, tmp))
    print(f"wrote {out.n_samples} samples to {args.out}")
    return 0


def _cmd_train(args):
    data = load_csv(args.input)
    widths = (data.n_dims,) + args.hidden + (data.n_classes,)
    spec = NetworkSpec(widths, args.activation)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=args.seed)
    params = train_stage1(data, spec, cfg)
    _atomic(args.out, lambda tmp: net.save_model(params, spec, tmp))
    print(f"trained {list(widths)} net on {data.n_samples} samples, model at {args.out}")
    return 0


def _cmd_extract(args):
    params, spec = net.load_model(args.model)
    data = load_csv(args.input)
    split_net = net.split_at_penultimate(params, spec)
    feats = net.feature_matrix(split_net, data.features)
    out = Dataset(feats, data.labels, data.n_classes)
    _atomic(args.out, lambda tmp: save_csv(out, tmp))
    print(f"extracted {out.n_samples} x {out.n_dims} features to {args.out}")
    return 0


def _cmd_augment(args):
    data = load_csv(args.input)
    features = net.feature_set_from_dataset(data)
    strategy = parse_strategy(args.strategy, args.k)
    real, pseudo = resample.generate(strategy, features, Stream(args.seed))
    blocks = []
    labels = []
    origins = []
    for k, r_mat, p_mat in zip(real.class_ids, real.matrices, pseudo.matrices):
        blocks.extend([r_mat, p_mat])
        labels.append(np.full(r_mat.shape[0] + p_mat.shape[0], k, dtype=np.int64))
        origins.extend(["real"] * r_mat.shape[0] + ["pseudo"] * p_mat.shape[0])
    out = Dataset(np.vstack(blocks), np.concatenate(labels), data.n_classes)
    _atomic(args.out, lambda tmp: save_csv(out, tmp, origins=origins))
    n_pseudo = origins.count("pseudo")
    print(f"wrote {out.n_samples} rows ({n_pseudo} pseudo) to {args.out}")
    return 0


def _cmd_retrain(args):
    params, spec = net.load_model(args.model)
    data = load_csv(args.features)
    split_net = net.split_at_penultimate(params, spec)
    if data.n_dims != split_net.feature_dim:
        raise DataError(f"{args.features}: {data.n_dims} dims do not match the "
                        f"model's feature layer ({split_net.feature_dim})")
    features = net.feature_set_from_dataset(data)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learning_rate=args.lr, seed=args.seed)
    retrained = net.retrain_head(split_net, features, None, cfg)
    new_params, new_spec = net.reassemble(retrained)
    _atomic(args.out, lambda tmp: net.save_model(new_params, new_spec, tmp))
    print(f"retrained head on {data.n_samples} rows, model at {args.out}")
    return 0


def _cmd_eval(args):
    params, spec = net.load_model(args.model)
    data = load_csv(args.input)
    if data.n_classes > spec.n_classes:
        raise DataError(f"{args.input}: labels exceed the model's {spec.n_classes} classes")
    predictions = net.predict(params, spec, data.features)
    minors = args.minors if args.minors is not None else ()
    report = score(confusion(data.labels, predictions, spec.n_classes), minors)
    doc = report.to_dict()
    if args.out:
        _write_json(args.out, doc)
        print(f"wrote report to {args.out}")
    else:
        print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_campaign(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.config}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DataError(f"{args.config}: config must be a JSON object")
    cfg, n_episodes = load_config(doc)
    result = run_campaign(cfg, n_episodes, threads=args.threads)
    files = emit_report(result, args.out, config_doc=doc)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def _cmd_report(args):
    try:
        with open(args.campaign, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.campaign}: invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "aggregate" not in doc or "episodes" not in doc:
        raise DataError(f"{args.campaign}: not a campaign document")
    files = emit_tables(doc, args.out)
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def build_parser():
    parser = _Parser(prog="cavityfill",
                     description="Feature-space resampling pipeline for "
                                 "imbalanced classification.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=fn)
        return p

    p = command("gen-data", _cmd_gen_data, "Generate a synthetic Gaussian-cluster dataset CSV.")
    p.add_argument("--classes", type=int, metavar="INT", required=True, help="number of classes")
    p.add_argument("--per-class", type=int, metavar="INT", required=True,
                   help="samples per class")
    p.add_argument("--dims", type=int, metavar="INT", required=True, help="feature dimensions")
    p.add_argument("--spread", type=float, metavar="FLOAT", default=0.3,
                   help="cluster standard deviation")
    p.add_argument("--seed", type=int, metavar="INT", required=True, help="random seed")
    p.add_argument("--out", metavar="PATH", required=True, help="output CSV path")

    p = command("imbalance", _cmd_imbalance, "Decimate minor classes of a dataset CSV.")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="input CSV")
    p.add_argument("--minors", type=_int_list, metavar="IDS", required=True,
                   help="comma-separated minor class ids")
    p.add_argument("--factor", type=int, metavar="INT", default=10, help="reduction factor")
    p.add_argument("--seed", type=int, metavar="INT", required=True, help="random seed")
    p.add_argument("--out", metavar="PATH", required=True, help="output CSV path")

    p = command("train", _cmd_train, "Train a classifier on a dataset CSV.")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="training CSV")
    p.add_argument("--hidden", type=_int_list, metavar="WIDTHS", default=(64, 32),
                   help="comma-separated hidden layer widths")
    p.add_argument("--activation", choices=("relu", "tanh"), default="relu",
                   help="hidden activation")
    p.add_argument("--epochs", type=int, metavar="INT", default=100, help="training epochs")
    p.add_argument("--batch-size", type=int, metavar="INT", default=128, help="minibatch size")
    p.add_argument("--lr", type=float, metavar="FLOAT", default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, metavar="INT", required=True, help="random seed")
    p.add_argument("--out", metavar="PATH", required=True, help="output model JSON path")

    p = command("extract", _cmd_extract, "Extract penultimate-layer features to CSV.")
    p.add_argument("--model", metavar="PATH", required=True, help="model JSON")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="input CSV")
    p.add_argument("--out", metavar="PATH", required=True, help="output feature CSV path")

    p = command("augment", _cmd_augment, "Rebalance a feature CSV with one strategy.")
    p.add_argument("--strategy", choices=STRATEGY_CLI_NAMES, required=True,
                   help="resampling strategy")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="feature CSV")
    p.add_argument("--k", type=int, metavar="INT", default=5, help="smote neighbor count")
    p.add_argument("--seed", type=int, metavar="INT", required=True, help="random seed")
    p.add_argument("--out", metavar="PATH", required=True,
                   help="output CSV path (adds an origin column)")

    p = command("retrain", _cmd_retrain, "Retrain a model's head on a feature CSV.")
    p.add_argument("--model", metavar="PATH", required=True, help="model JSON")
    p.add_argument("--features", metavar="PATH", required=True,
                   help="feature CSV (origin column accepted)")
    p.add_argument("--epochs", type=int, metavar="INT", default=100, help="training epochs")
    p.add_argument("--batch-size", type=int, metavar="INT", default=128, help="minibatch size")
    p.add_argument("--lr", type=float, metavar="FLOAT", default=1e-3, help="Adam learning rate")
    p.add_argument("--seed", type=int, metavar="INT", required=True, help="random seed")
    p.add_argument("--out", metavar="PATH", required=True, help="output model JSON path")

    p = command("eval", _cmd_eval, "Score a model on a labeled CSV.")
    p.add_argument("--model", metavar="PATH", required=True, help="model JSON")
    p.add_argument("--in", dest="input", metavar="PATH", required=True, help="evaluation CSV")
    p.add_argument("--minors", type=_int_list, metavar="IDS", default=None,
                   help="comma-separated minor class ids")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="report JSON path (stdout when omitted)")

    p = command("campaign", _cmd_campaign, "Run a full experiment campaign from a config.")
    p.add_argument("--config", metavar="PATH", required=True, help="campaign config JSON")
    p.add_argument("--out", metavar="DIR", required=True, help="output directory")
    p.add_argument("--threads", type=int, metavar="INT", default=None,
                   help="worker processes (default: all cores)")

    p = command("report", _cmd_report, "Regenerate tables from a campaign.json.")
    p.add_argument("--campaign", metavar="PATH", required=True, help="campaign.json path")
    p.add_argument("--out", metavar="DIR", required=True, help="output directory")

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DataError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
