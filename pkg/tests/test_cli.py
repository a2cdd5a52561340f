import hashlib
import json
import subprocess
import sys
from pathlib import Path

import pytest

from dbnf0.cli import main
from dbnf0.corpus import load_model


def tree_digest(root):
    digest = hashlib.sha256()
    for path in sorted(Path(root).rglob("*")):
        if path.is_file():
            digest.update(path.name.encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """Generated corpus + pretrained/fine-tuned models shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    corpus_dir = root / "corpus"
    assert main(["gen", "--out", str(corpus_dir), "--utterances", "8",
                 "--seed", "3"]) == 0
    manifest = corpus_dir / "manifest.tsv"
    dbn_path = root / "stack.json"
    assert main(["pretrain", "--corpus", str(manifest), "--out", str(dbn_path),
                 "--layers", "8,6", "--epochs", "2", "--seed", "5"]) == 0
    dnn_path = root / "net.json"
    assert main(["finetune", "--corpus", str(manifest), "--dbn", str(dbn_path),
                 "--out", str(dnn_path), "--split", "4,2,2",
                 "--epochs", "3", "--lr", "0.2", "--seed", "6"]) == 0
    return root


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["gen", "--out", str(a), "--utterances", "5", "--seed", "9"]) == 0
    assert main(["gen", "--out", str(b), "--utterances", "5", "--seed", "9"]) == 0
    assert tree_digest(a) == tree_digest(b)


def test_gen_requires_out():
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--utterances", "5"])
    assert exc.value.code == 2


def test_pretrain_log_lines(workdir):
    log = (workdir / "stack.json.log").read_text().splitlines()
    assert len(log) == 2 * 2  # layers x epochs
    assert all(line.startswith("layer=") and "recon_rmse=" in line
               for line in log)
    assert load_model(workdir / "stack.json").kind == "dbn"


def test_pretrain_defaults_echo_training_configuration(workdir):
    cfg = load_model(workdir / "stack.json").config
    assert cfg["learning_rate"] == 0.002
    assert cfg["momentum"] == 0.95
    assert cfg["minibatch_size"] == 10
    assert cfg["cd_steps"] == 1


def test_finetune_outputs(workdir):
    model_file = load_model(workdir / "net.json")
    assert model_file.kind == "dnn"
    assert model_file.model.target_std > 0
    history = json.loads((workdir / "net.json.history.json").read_text())
    assert len(history["epochs"]) == 3
    assert {"epoch", "train_loss", "cv_loss", "cv_mse", "lr"} <= \
        set(history["epochs"][0])
    assert "lr_events" in history


def test_predict_track(workdir, tmp_path, capsys):
    corpus_dir = workdir / "corpus"
    ann = corpus_dir / "ann" / "utt0000.ann"
    dur = corpus_dir / "dur" / "utt0000.dur"
    out = tmp_path / "pred.f0"
    assert main(["predict", "--model", str(workdir / "net.json"),
                 "--annotation", str(ann), "--durations", str(dur),
                 "--out", str(out)]) == 0
    capsys.readouterr()
    n_frames = sum(sum(int(v) for v in line.split())
                   for line in dur.read_text().splitlines() if line.strip())
    assert len(out.read_text().splitlines()) == n_frames
    # determinism
    out2 = tmp_path / "pred2.f0"
    main(["predict", "--model", str(workdir / "net.json"),
          "--annotation", str(ann), "--durations", str(dur), "--out", str(out2)])
    assert out.read_bytes() == out2.read_bytes()


def test_eval_identical_tracks(workdir, tmp_path, capsys):
    track = workdir / "corpus" / "f0" / "utt0001.f0"
    assert main(["eval", "--pred-track", str(track),
                 "--ref-track", str(track)]) == 0
    out = capsys.readouterr().out
    assert "rmse_hz=0.0" in out
    assert "xcorr=1.0" in out


def test_eval_model_mode(workdir, capsys):
    assert main(["eval", "--model", str(workdir / "net.json"),
                 "--corpus", str(workdir / "corpus" / "manifest.tsv"),
                 "--split", "4,2,2"]) == 0
    out = capsys.readouterr().out
    assert "aggregate rmse_hz=" in out and "xcorr=" in out


def test_sweep_tiny_grid(workdir, tmp_path, capsys):
    out_dir = tmp_path / "sweep"
    assert main(["sweep", "--corpus", str(workdir / "corpus" / "manifest.tsv"),
                 "--out", str(out_dir), "--layers", "1", "--units", "6",
                 "--split", "4,2,2", "--rbm-epochs", "1", "--epochs", "2",
                 "--seed", "2"]) == 0
    table = (out_dir / "table.tsv").read_text().splitlines()
    assert table[0].startswith("layers\tunits")
    assert len(table) == 2
    assert "best layers=" in capsys.readouterr().out


def test_inspect(workdir, capsys):
    assert main(["inspect", "--model", str(workdir / "net.json")]) == 0
    out = capsys.readouterr().out
    assert "kind=dnn" in out and "checksum=ok" in out


def test_help_exits_zero():
    for cmd in ("gen", "pretrain", "finetune", "predict", "eval", "sweep",
                "inspect"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0


def test_bad_split_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["finetune", "--corpus", "x", "--dbn", "y", "--out", "z",
              "--split", "1,2"])
    assert exc.value.code == 2


def test_runtime_failure_exit_code(tmp_path, capsys):
    assert main(["pretrain", "--corpus", str(tmp_path / "nope.tsv"),
                 "--out", str(tmp_path / "m.json")]) == 1
    assert "error:" in capsys.readouterr().err


def test_inputs_not_mutated(workdir):
    corpus_dir = workdir / "corpus"
    before = tree_digest(corpus_dir)
    main(["eval", "--model", str(workdir / "net.json"),
          "--corpus", str(corpus_dir / "manifest.tsv"), "--split", "4,2,2"])
    assert tree_digest(corpus_dir) == before


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dbnf0.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pretrain" in proc.stdout
