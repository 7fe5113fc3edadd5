import json

import numpy as np
import pytest

from eval_harness.cli import main
from eval_harness.interchange import load_directory

from conftest import write_interchange_dir


def run(args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def trained_model(exported_corpus, tmp_path_factory):
    out = tmp_path_factory.mktemp("ckpt") / "cnn.pt"
    code = run(["train", "--train-manifest", exported_corpus / "orig_train",
                "--test-manifest", exported_corpus / "orig_test",
                "--seed", "0", "--epochs", "6", "--out", out])
    assert code == 0
    return out


@pytest.mark.pipeline
def test_feature_loss_command(exported_corpus, trained_model, tmp_path):
    out = tmp_path / "fl.json"
    code = run(["feature-loss", "--originals", exported_corpus / "orig_test",
                "--recons", exported_corpus / "orig_test",
                "--model", trained_model, "--root", "--out", out])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["method_tag"] == "original"
    assert report["loss1"] == 0.0 and report["loss2"] == 0.0
    assert report["root_loss1"] == 0.0
    assert report["baseline"] >= 0.70
    assert report["accuracy"] is None


@pytest.mark.pipeline
def test_accuracy_command(exported_corpus, trained_model, tmp_path):
    out = tmp_path / "acc.json"
    code = run(["accuracy", "--recons", exported_corpus / "orig_test",
                "--model", trained_model, "--out", out])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["accuracy"] == pytest.approx(report["baseline"])
    assert report["per_model"] == [report["accuracy"]]


@pytest.mark.pipeline
def test_noisier_recons_score_worse(exported_corpus, trained_model,
                                    tmp_path):
    images, labels, _ = load_directory(exported_corpus / "orig_test")
    rng = np.random.default_rng(0)
    mild = np.clip(images + rng.normal(0, 0.05, images.shape), 0, 1)
    harsh = np.clip(images + rng.normal(0, 0.25, images.shape), 0, 1)
    write_interchange_dir(tmp_path / "mild", mild.astype(np.float32),
                          labels, "mild")
    write_interchange_dir(tmp_path / "harsh", harsh.astype(np.float32),
                          labels, "harsh")
    reports = {}
    for tag in ("mild", "harsh"):
        out = tmp_path / f"{tag}.json"
        assert run(["feature-loss", "--originals",
                    exported_corpus / "orig_test", "--recons",
                    tmp_path / tag, "--model", trained_model,
                    "--out", out]) == 0
        reports[tag] = json.loads(out.read_text())
    assert reports["harsh"]["loss1"] > reports["mild"]["loss1"] > 0
    assert reports["harsh"]["loss2"] > reports["mild"]["loss2"] > 0


def test_unknown_command_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["wat"])
    assert err.value.code == 2


def test_runtime_failure_exits_1(tmp_path, capsys):
    code = main(["accuracy", "--recons", str(tmp_path), "--model",
                 str(tmp_path / "none.pt"), "--out",
                 str(tmp_path / "r.json")])
    assert code == 1
    assert "error:" in capsys.readouterr().err
