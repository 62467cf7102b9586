"""Campaign harness: sweep minor-class counts, compare strategies, aggregate.

One episode sweeps the number of minor classes; for each sweep point the
minors are drawn fresh, the base training data is decimated, one stage-1
network is trained and shared by every strategy in that cell group, and each
strategy only changes the head's training features. Campaigns average
episodes and emit JSON plus CSV tables.

All randomness is derived from the master seed through documented tokens
(purpose tag, episode index, #minor, strategy kind, and class id inside the
generators), so results do not depend on execution order or thread count.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import net, resample
from .dataset import (Dataset, ImbalanceSpec, SyntheticSpec, class_counts,
                      load_csv, make_synthetic, split, synthesize_imbalanced)
from .errors import DataError
from .metrics import METRIC_NAMES, confusion, score
from .net import NetworkSpec, TrainConfig
from .resample import Strategy, parse_strategy
from .rng import Stream, derive_seed

DEFAULT_SWEEP = tuple(range(1, 10))
DEFAULT_STRATEGIES = ("baseline", "under", "over", "smote", "perturb",
                      "cavity", "cavity-diag")


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything one campaign needs besides the episode count."""

    base: object  # SyntheticSpec or a CSV path
    reduction_factor: int = 10
    minor_sweep: tuple = DEFAULT_SWEEP
    strategies: tuple = ()
    hidden_widths: tuple = (64, 32)
    activation: str = "relu"
    stage1: TrainConfig = TrainConfig(epochs=40)
    head: TrainConfig = TrainConfig(epochs=100)
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.reduction_factor < 2:
            raise DataError("reduction_factor must be >= 2")
        sweep = tuple(int(m) for m in self.minor_sweep)
        if not sweep or any(m < 1 for m in sweep):
            raise DataError("minor_sweep must be positive counts")
        strategies = self.strategies or tuple(
            parse_strategy(name) for name in DEFAULT_STRATEGIES)
        if not all(isinstance(s, Strategy) for s in strategies):
            raise DataError("strategies must be Strategy values")
        object.__setattr__(self, "minor_sweep", sweep)
        object.__setattr__(self, "strategies", tuple(strategies))
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))


@dataclass(frozen=True)
class CellResult:
    """One (#minor, strategy) evaluation within an episode."""

    n_minor: int
    strategy: str  # CLI name
    minor_ids: tuple
    report: object


@dataclass(frozen=True)
class EpisodeResult:
    episode: int
    cells: tuple


@dataclass(frozen=True)
class CampaignResult:
    episodes: tuple
    aggregate: tuple  # ((n_minor, strategy cli name, {metric: mean}), ...)
    n_episodes: int


def resolve_network(cfg, n_dims, n_classes):
    """Concrete NetworkSpec for this data shape."""
    return NetworkSpec((n_dims,) + cfg.hidden_widths + (n_classes,), cfg.activation)


def train_stage1(data, net_spec, cfg):
    """Initialize from cfg.seed and train the full network once."""
    params = net.init(net_spec, derive_seed(cfg.seed, "net-init"))
    return net.train(params, net_spec, data, cfg)


def run_cell(data, test, strategy, net_spec, stage1_cfg, head_cfg, gen_stream,
             minor_ids, stage1_params=None):
    """Two-stage pipeline for one strategy; scores on the untouched test set.

    Pass stage1_params to share one stage-1 network across strategies (the
    fairness contract within a cell group); omit it to train here.
    """
    if stage1_params is None:
        stage1_params = train_stage1(data, net_spec, stage1_cfg)
    split_net = net.split_at_penultimate(stage1_params, net_spec)
    features = net.extract_features(split_net, data)
    real, pseudo = resample.generate(strategy, features, gen_stream)
    retrained = net.retrain_head(split_net, real, pseudo, head_cfg)
    params, spec = net.reassemble(retrained)
    predictions = net.predict(params, spec, test.features)
    return score(confusion(test.labels, predictions, spec.n_classes), minor_ids)


def run_episode(cfg, episode_index, base_train, test):
    """All sweep points and strategies for one episode."""
    n_classes = base_train.n_classes
    net_spec = resolve_network(cfg, base_train.n_dims, n_classes)
    master = cfg.seed
    cells = []
    for m in cfg.minor_sweep:
        if m >= n_classes:
            raise DataError(f"sweep value {m} needs fewer minors than {n_classes} classes")
        minors = Stream(derive_seed(master, "minors", episode_index, m)).subset(n_classes, m)
        minors = tuple(int(k) for k in minors)
        imb = synthesize_imbalanced(
            base_train, ImbalanceSpec(minors, cfg.reduction_factor),
            Stream(derive_seed(master, "decimate", episode_index, m)))
        stage1_cfg = replace(cfg.stage1, seed=derive_seed(master, "stage1", episode_index, m))
        shared = train_stage1(imb, net_spec, stage1_cfg)
        for strategy in cfg.strategies:
            gen_stream = Stream(derive_seed(master, "generate", episode_index, m,
                                            strategy.kind))
            head_cfg = replace(cfg.head, seed=derive_seed(master, "head", episode_index, m,
                                                          strategy.kind))
            report = run_cell(imb, test, strategy, net_spec, stage1_cfg, head_cfg,
                              gen_stream, minors, stage1_params=shared)
            cells.append(CellResult(m, strategy.cli_name, minors, report))
    return EpisodeResult(episode_index, tuple(cells))


def prepare_data(cfg):
    """Materialize the base dataset and the fixed train/test split."""
    if isinstance(cfg.base, SyntheticSpec):
        data = make_synthetic(cfg.base)
    else:
        data = load_csv(cfg.base)
    if max(cfg.minor_sweep) >= data.n_classes:
        raise DataError("minor_sweep exceeds the class count of the base dataset")
    if np.any(class_counts(data) < 2):
        raise DataError("every class needs at least 2 samples")
    return split(data, cfg.test_fraction, Stream(derive_seed(cfg.seed, "split")))


def _episode_task(args):
    cfg, episode_index, base_train, test = args
    return run_episode(cfg, episode_index, base_train, test)


def run_campaign(cfg, n_episodes, threads=None):
    """Run episodes (possibly in parallel) and aggregate their scores.

    The result is a pure function of (cfg, n_episodes): episode seeds are
    derived, not sequential, and results are merged in episode order.
    """
    if n_episodes < 1:
        raise DataError("n_episodes must be >= 1")
    base_train, test = prepare_data(cfg)
    tasks = [(cfg, ep, base_train, test) for ep in range(n_episodes)]
    workers = os.cpu_count() if threads is None else max(1, int(threads))
    if workers > 1 and n_episodes > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            episodes = list(pool.map(_episode_task, tasks))
    else:
        episodes = [_episode_task(t) for t in tasks]
    episodes.sort(key=lambda e: e.episode)

    aggregate = []
    for m in cfg.minor_sweep:
        for strategy in cfg.strategies:
            name = strategy.cli_name
            picked = [c.report for e in episodes for c in e.cells
                      if c.n_minor == m and c.strategy == name]
            means = {metric: float(np.mean([r.scalars()[metric] for r in picked]))
                     for metric in METRIC_NAMES}
            aggregate.append((m, name, means))
    return CampaignResult(tuple(episodes), tuple(aggregate), n_episodes)


def campaign_to_doc(result, config_doc):
    """JSON-ready document with config echo, per-cell scores, and aggregates."""
    return {
        "config": config_doc,
        "n_episodes": result.n_episodes,
        "episodes": [
            {
                "episode": e.episode,
                "cells": [
                    {
                        "n_minor": c.n_minor,
                        "strategy": c.strategy,
                        "minor_ids": list(c.minor_ids),
                        "scores": c.report.to_dict(),
                    }
                    for c in e.cells
                ],
            }
            for e in result.episodes
        ],
        "aggregate": [
            {"n_minor": m, "strategy": name, "scores": means}
            for m, name, means in result.aggregate
        ],
    }


def _atomic_write(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def emit_tables(doc, out_dir):
    """Write the eight aggregate tables and long.csv from a campaign document.

    Returns the list of file paths written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    aggregate = doc["aggregate"]
    sweep = sorted({entry["n_minor"] for entry in aggregate})
    strategy_names = list(dict.fromkeys(entry["strategy"] for entry in aggregate))
    means = {(entry["n_minor"], entry["strategy"]): entry["scores"]
             for entry in aggregate}
    labels = [resample.parse_strategy(name).label for name in strategy_names]
    for metric in METRIC_NAMES:
        rows = ["#Minor," + ",".join(labels)]
        for m in sweep:
            cells = [f"{means[(m, name)][metric]:.12g}" for name in strategy_names]
            rows.append(f"{m}," + ",".join(cells))
        path = os.path.join(out_dir, f"table_{metric}.csv")
        _atomic_write(path, "\n".join(rows) + "\n")
        written.append(path)

    rows = ["episode,n_minor,strategy,metric,value"]
    for episode in doc["episodes"]:
        for cell in episode["cells"]:
            for metric in METRIC_NAMES:
                rows.append(f"{episode['episode']},{cell['n_minor']},{cell['strategy']},"
                            f"{metric},{cell['scores'][metric]:.17g}")
    path = os.path.join(out_dir, "long.csv")
    _atomic_write(path, "\n".join(rows) + "\n")
    written.append(path)
    return written


def emit_report(result, out_dir, config_doc=None):
    """Write campaign.json, the eight metric tables, and long.csv.

    Returns the list of file paths written. campaign.json is byte-stable:
    sorted keys, repr floats, newline-terminated.
    """
    os.makedirs(out_dir, exist_ok=True)
    doc = campaign_to_doc(result, config_doc if config_doc is not None else {})
    path = os.path.join(out_dir, "campaign.json")
    _atomic_write(path, json.dumps(doc, sort_keys=True) + "\n")
    return [path] + emit_tables(doc, out_dir)


def default_config(seed=1):
    """The default desk-scale campaign as a plain config dictionary."""
    return {
        "dataset": {
            "synthetic": {
                "n_classes": 10,
                "samples_per_class": 625,
                "n_dims": 16,
                "cluster_spread": 0.3,
                "seed": derive_seed(seed, "dataset"),
            },
            "test_fraction": 0.2,
        },
        "reduction_factor": 10,
        "minor_sweep": list(DEFAULT_SWEEP),
        "strategies": list(DEFAULT_STRATEGIES),
        "smote_k": 5,
        "network": {"hidden": [64, 32], "activation": "relu"},
        "train": {"epochs": 40, "batch_size": 128, "learning_rate": 1e-3},
        "head_train": {"epochs": 100, "batch_size": 128, "learning_rate": 1e-3},
        "episodes": 20,
        "seed": seed,
    }


def _train_config(doc, name):
    known = {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2",
             "adam_epsilon"}
    extra = set(doc) - known
    if extra:
        raise DataError(f"{name}: unknown keys {sorted(extra)}")
    return TrainConfig(**{k: doc[k] for k in doc})


def load_config(doc):
    """Parse a campaign config dictionary into (EpisodeConfig, n_episodes).

    Omitted keys fall back to default_config() values; `seed` is required.
    """
    if "seed" not in doc:
        raise DataError("config requires an explicit seed")
    defaults = default_config(int(doc["seed"]))
    merged = {**defaults, **doc}
    unknown = set(merged) - set(defaults)
    if unknown:
        raise DataError(f"config: unknown keys {sorted(unknown)}")

    ds = merged["dataset"]
    bad = set(ds) - {"synthetic", "csv", "test_fraction"}
    if bad:
        raise DataError(f"dataset: unknown keys {sorted(bad)}")
    if "synthetic" in ds and "csv" in ds:
        raise DataError("dataset: give either synthetic or csv, not both")
    if "csv" in ds:
        base = str(ds["csv"])
    elif "synthetic" in ds:
        syn = {**defaults["dataset"]["synthetic"], **ds["synthetic"]}
        bad = set(syn) - set(defaults["dataset"]["synthetic"])
        if bad:
            raise DataError(f"dataset.synthetic: unknown keys {sorted(bad)}")
        base = SyntheticSpec(
            n_classes=int(syn["n_classes"]),
            samples_per_class=int(syn["samples_per_class"]),
            n_dims=int(syn["n_dims"]),
            cluster_spread=float(syn["cluster_spread"]),
            seed=int(syn["seed"]),
        )
    else:
        raise DataError("dataset: needs a synthetic spec or a csv path")

    smote_k = int(merged["smote_k"])
    strategies = tuple(parse_strategy(name, smote_k) for name in merged["strategies"])
    network = merged["network"]
    bad = set(network) - {"hidden", "activation"}
    if bad:
        raise DataError(f"network: unknown keys {sorted(bad)}")
    cfg = EpisodeConfig(
        base=base,
        reduction_factor=int(merged["reduction_factor"]),
        minor_sweep=tuple(merged["minor_sweep"]),
        strategies=strategies,
        hidden_widths=tuple(network.get("hidden", defaults["network"]["hidden"])),
        activation=network.get("activation", defaults["network"]["activation"]),
        stage1=_train_config(merged["train"], "train"),
        head=_train_config(merged["head_train"], "head_train"),
        test_fraction=float(ds.get("test_fraction", defaults["dataset"]["test_fraction"])),
        seed=int(merged["seed"]),
    )
    return cfg, int(merged["episodes"])
