"""Command-line pipeline: subcommand behavior, file formats, exit codes."""

import json
import os

import numpy as np
import pytest

import cavityfill
from cavityfill.cli import build_parser, main
from cavityfill.dataset import class_counts, load_csv
from cavityfill.metrics import METRIC_NAMES

SUBCOMMANDS = ("gen-data", "imbalance", "train", "extract", "augment",
               "retrain", "eval", "campaign", "report")


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """One full CLI chain shared by the read-only assertions below."""
    root = tmp_path_factory.mktemp("cli")
    p = {name: str(root / name) for name in
         ("base.csv", "imb.csv", "model.json", "feats.csv", "aug.csv",
          "model2.json", "report.json")}
    assert run("gen-data", "--classes", "3", "--per-class", "30", "--dims", "4",
               "--spread", "0.25", "--seed", "11", "--out", p["base.csv"]) == 0
    assert run("imbalance", "--in", p["base.csv"], "--minors", "0",
               "--factor", "5", "--seed", "12", "--out", p["imb.csv"]) == 0
    assert run("train", "--in", p["imb.csv"], "--hidden", "12,8",
               "--epochs", "10", "--seed", "13", "--out", p["model.json"]) == 0
    assert run("extract", "--model", p["model.json"], "--in", p["imb.csv"],
               "--out", p["feats.csv"]) == 0
    assert run("augment", "--strategy", "cavity", "--in", p["feats.csv"],
               "--seed", "14", "--out", p["aug.csv"]) == 0
    assert run("retrain", "--model", p["model.json"], "--features", p["aug.csv"],
               "--epochs", "10", "--seed", "15", "--out", p["model2.json"]) == 0
    assert run("eval", "--model", p["model2.json"], "--in", p["base.csv"],
               "--minors", "0", "--out", p["report.json"]) == 0
    return p


def test_pipeline_file_contents(pipeline):
    base = load_csv(pipeline["base.csv"])
    assert class_counts(base).tolist() == [30, 30, 30]
    imb = load_csv(pipeline["imb.csv"])
    assert class_counts(imb).tolist() == [6, 30, 30]
    feats = load_csv(pipeline["feats.csv"])
    assert feats.n_dims == 8 and feats.n_samples == 66
    aug = load_csv(pipeline["aug.csv"])
    assert class_counts(aug).tolist() == [30, 30, 30]
    report = json.loads(open(pipeline["report.json"]).read())
    assert set(METRIC_NAMES) <= set(report)
    assert report["minor_ids"] == [0]


def test_augment_writes_origin_column(pipeline):
    lines = open(pipeline["aug.csv"]).read().splitlines()
    assert lines[0].endswith(",origin")
    origins = [ln.rsplit(",", 1)[1] for ln in lines[1:]]
    assert origins.count("pseudo") == 24  # class 0 refilled from 6 to 30
    assert origins.count("real") == 66
    # within a class, real rows precede pseudo rows
    labels = [ln.rsplit(",", 2)[1] for ln in lines[1:]]
    for k in "012":
        seq = [o for o, lab in zip(origins, labels) if lab == k]
        assert seq == sorted(seq, key=lambda o: o != "real")


def test_model_files_round_trip(pipeline):
    from cavityfill.net import load_model
    params, spec = load_model(pipeline["model.json"])
    assert spec.layer_widths == (4, 12, 8, 3)
    params2, spec2 = load_model(pipeline["model2.json"])
    assert spec2 == spec
    # extractor unchanged by retrain, head replaced
    for a, b in zip(params.weights[:-1], params2.weights[:-1]):
        np.testing.assert_array_equal(a, b)
    assert not np.array_equal(params.weights[-1], params2.weights[-1])


def test_eval_prints_to_stdout_without_out(pipeline, capsys):
    assert run("eval", "--model", pipeline["model.json"],
               "--in", pipeline["base.csv"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["minor_ids"] == []


def test_gen_data_is_byte_deterministic(tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    for out in (a, b):
        assert run("gen-data", "--classes", "2", "--per-class", "5", "--dims", "3",
                   "--seed", "77", "--out", out) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_gen_data_ignores_seed_environment(tmp_path, monkeypatch):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert run("gen-data", "--classes", "2", "--per-class", "5", "--dims", "3",
               "--seed", "77", "--out", a) == 0
    monkeypatch.setenv("CAVITYFILL_SEED", "123456")
    assert run("gen-data", "--classes", "2", "--per-class", "5", "--dims", "3",
               "--seed", "77", "--out", b) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_no_seed_environment_variable_in_source():
    src_dir = os.path.dirname(cavityfill.__file__)
    for name in sorted(os.listdir(src_dir)):
        if not name.endswith(".py"):
            continue
        text = open(os.path.join(src_dir, name)).read()
        assert "CAVITYFILL_SEED" not in text, name
        if name != "_kernels.py":  # backend flag is the one env lookup
            assert "os.environ" not in text and "getenv" not in text, name


def test_augment_is_byte_deterministic(pipeline, tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    for out in (a, b):
        assert run("augment", "--strategy", "smote", "--k", "3",
                   "--in", pipeline["feats.csv"], "--seed", "5", "--out", out) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_no_stray_temp_files(pipeline):
    directory = os.path.dirname(pipeline["base.csv"])
    assert not [n for n in os.listdir(directory) if ".tmp." in n]


# ---- campaign / report ----

@pytest.fixture(scope="module")
def campaign_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("camp")
    config = {
        "seed": 6,
        "episodes": 2,
        "dataset": {"synthetic": {"n_classes": 4, "samples_per_class": 50,
                                  "n_dims": 5, "cluster_spread": 0.3, "seed": 1}},
        "reduction_factor": 5,
        "minor_sweep": [1, 2],
        "strategies": ["baseline", "cavity"],
        "network": {"hidden": [12]},
        "train": {"epochs": 6, "batch_size": 32},
        "head_train": {"epochs": 8, "batch_size": 32},
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))
    out = root / "out"
    assert run("campaign", "--config", str(cfg_path), "--out", str(out),
               "--threads", "1") == 0
    return root, cfg_path, out


def test_campaign_outputs(campaign_dir):
    _, cfg_path, out = campaign_dir
    names = sorted(p.name for p in out.iterdir())
    assert "campaign.json" in names and "long.csv" in names
    assert len(names) == 10
    doc = json.loads((out / "campaign.json").read_text())
    assert doc["config"] == json.loads(cfg_path.read_text())
    assert {c["strategy"] for e in doc["episodes"] for c in e["cells"]} == \
        {"baseline", "cavity"}


def test_report_regenerates_identical_tables(campaign_dir, tmp_path):
    _, _, out = campaign_dir
    redo = tmp_path / "redo"
    assert run("report", "--campaign", str(out / "campaign.json"),
               "--out", str(redo)) == 0
    for name in (p.name for p in out.iterdir() if p.name != "campaign.json"):
        assert (redo / name).read_bytes() == (out / name).read_bytes()


# ---- exit codes ----

def test_usage_errors_exit_1(capsys):
    for argv in ([], ["frobnicate"], ["gen-data"], ["augment", "--strategy", "x"],
                 ["imbalance", "--in", "x", "--minors", "a,b", "--seed", "1",
                  "--out", "y"]):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 1
        capsys.readouterr()


def test_help_exits_0(capsys):
    for argv in (["--help"],) + tuple([name, "--help"] for name in SUBCOMMANDS):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 0
        capsys.readouterr()


def test_data_errors_exit_2(tmp_path, capsys):
    missing = str(tmp_path / "missing.csv")
    out = str(tmp_path / "out.csv")
    assert run("imbalance", "--in", missing, "--minors", "0", "--seed", "1",
               "--out", out) == 2
    assert "error:" in capsys.readouterr().err

    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,header\n1,2,3\n")
    assert run("train", "--in", str(bad), "--seed", "1",
               "--out", str(tmp_path / "m.json")) == 2
    err = capsys.readouterr().err
    assert "error:" in err and "line 1" in err

    cfg = tmp_path / "cfg.json"
    cfg.write_text("{broken")
    assert run("campaign", "--config", str(cfg), "--out", str(tmp_path / "o")) == 2
    capsys.readouterr()
    cfg.write_text(json.dumps({"seed": 1, "nope": 2}))
    assert run("campaign", "--config", str(cfg), "--out", str(tmp_path / "o")) == 2
    capsys.readouterr()
    cfg.write_text(json.dumps([1, 2]))
    assert run("campaign", "--config", str(cfg), "--out", str(tmp_path / "o")) == 2
    capsys.readouterr()

    assert run("report", "--campaign", str(cfg), "--out", str(tmp_path / "o")) == 2
    capsys.readouterr()


def test_retrain_rejects_mismatched_feature_width(pipeline, tmp_path, capsys):
    # base.csv has raw 4-dim rows, the model's feature layer is 8 wide
    assert run("retrain", "--model", pipeline["model.json"],
               "--features", pipeline["base.csv"], "--seed", "1",
               "--out", str(tmp_path / "m.json")) == 2
    assert "dims do not match" in capsys.readouterr().err


def test_eval_rejects_labels_beyond_model(pipeline, tmp_path, capsys):
    extra = tmp_path / "extra.csv"
    extra.write_text("f0,f1,f2,f3,label\n0,0,0,0,7\n")
    assert run("eval", "--model", pipeline["model.json"], "--in", str(extra)) == 2
    capsys.readouterr()


def test_parser_lists_all_subcommands():
    parser = build_parser()
    text = parser.format_help()
    for name in SUBCOMMANDS:
        assert name in text
