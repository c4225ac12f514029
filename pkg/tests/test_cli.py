import json

import pytest

from hdx.cli import (
    EXIT_CONFIG,
    EXIT_EMPTY_NORMAL,
    EXIT_IO,
    EXIT_PARSE,
    EXIT_SCHEMA,
    load_model,
    main,
    write_model,
)

from conftest import write_nslkdd

# small hyperparameters so pipeline tests stay fast
FAST = ["--dim", "512", "--levels", "4", "--epochs", "3", "--seed", "7"]


def run_train(tmp_path, train_file, extra=None):
    out = tmp_path / "out"
    argv = ["train", "--train", str(train_file), "--out", str(out), *FAST, *(extra or [])]
    code = main(argv)
    return code, out


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def test_train_writes_model_and_reports_epochs(tmp_path, capsys):
    train_file = write_nslkdd(tmp_path / "train.txt", n_rows=200, seed=1)
    code, out = run_train(tmp_path, train_file)
    assert code == 0
    captured = capsys.readouterr().out
    assert "epoch 1:" in captured and "epoch 3:" in captured

    payload = load_model(out / "model.json")
    assert payload["format_version"] == 1
    assert payload["config"]["dim"] == 512
    assert payload["config"]["seed"] == 7
    assert len(payload["training_stats"]) == 3
    assert len(payload["s_norm"]) == 512
    assert len(payload["feature_specs"]) == 41


def test_train_model_file_deterministic(tmp_path):
    train_file = write_nslkdd(tmp_path / "train.txt", n_rows=150, seed=2)
    _, out1 = run_train(tmp_path / "a", train_file)
    _, out2 = run_train(tmp_path / "b", train_file)
    assert (out1 / "model.json").read_bytes() == (out2 / "model.json").read_bytes()


def test_train_missing_file_exit_code(tmp_path, capsys):
    code = main(["train", "--train", str(tmp_path / "missing.txt"),
                 "--out", str(tmp_path), *FAST[:-2], "--seed", "1"])
    assert code == EXIT_IO
    assert "missing.txt" in capsys.readouterr().err


def test_train_requires_seed(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("HDX_SEED", raising=False)
    train_file = write_nslkdd(tmp_path / "train.txt", n_rows=50, seed=3)
    code = main(["train", "--train", str(train_file), "--out", str(tmp_path / "o"),
                 "--dim", "64", "--levels", "4"])
    assert code == EXIT_CONFIG
    assert "seed" in capsys.readouterr().err


def test_train_seed_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("HDX_SEED", "99")
    train_file = write_nslkdd(tmp_path / "train.txt", n_rows=50, seed=3)
    code = main(["train", "--train", str(train_file), "--out", str(tmp_path / "o"),
                 "--dim", "64", "--levels", "4", "--epochs", "1"])
    assert code == 0
    assert load_model(tmp_path / "o" / "model.json")["config"]["seed"] == 99


def test_train_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("a,b,c\n")
    code = main(["train", "--train", str(bad), "--out", str(tmp_path / "o"), *FAST])
    assert code == EXIT_PARSE
    assert "line 1" in capsys.readouterr().err


def test_train_empty_normal_exit_code(tmp_path):
    train_file = write_nslkdd(tmp_path / "t.txt", n_rows=60, seed=4, anomaly_fraction=1.0)
    code, _ = run_train(tmp_path, train_file)
    assert code == EXIT_EMPTY_NORMAL


def test_train_normal_sample_cap(tmp_path, capsys):
    train_file = write_nslkdd(tmp_path / "t.txt", n_rows=200, seed=5, anomaly_fraction=0.2)
    code, out = run_train(tmp_path, train_file, extra=["--normal-sample", "20"])
    assert code == 0
    assert "normal subset: 20 records" in capsys.readouterr().out


def test_train_config_file_precedence(tmp_path):
    train_file = write_nslkdd(tmp_path / "t.txt", n_rows=80, seed=6)
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("epochs = 5\nlevels = 8  # comment\nseed = 42\n")
    out = tmp_path / "o"
    # --epochs on the command line beats the config file; levels/seed come from it
    code = main(["train", "--train", str(train_file), "--out", str(out),
                 "--dim", "128", "--epochs", "2", "--config", str(cfg_file)])
    assert code == 0
    payload = load_model(out / "model.json")
    assert payload["config"]["epochs"] == 2
    assert payload["config"]["levels"] == 8
    assert payload["config"]["seed"] == 42


def test_train_bad_config_file(tmp_path, capsys):
    train_file = write_nslkdd(tmp_path / "t.txt", n_rows=50, seed=6)
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("volume = 11\n")
    code = main(["train", "--train", str(train_file), "--out", str(tmp_path / "o"),
                 "--config", str(cfg_file), *FAST])
    assert code == EXIT_CONFIG
    assert "volume" in capsys.readouterr().err


def test_train_dump_normalized(tmp_path):
    train_file = write_nslkdd(tmp_path / "t.txt", n_rows=40, seed=8)
    dump = tmp_path / "norm.csv"
    code, _ = run_train(tmp_path, train_file, extra=["--dump-normalized", str(dump)])
    assert code == 0
    lines = dump.read_text().splitlines()
    assert len(lines) == 41  # header + 40 rows
    assert lines[0].endswith(",label")


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


@pytest.fixture
def trained(tmp_path):
    train_file = write_nslkdd(tmp_path / "train.txt", n_rows=300, seed=11, anomaly_fraction=0.3)
    test_file = write_nslkdd(tmp_path / "test.txt", n_rows=120, seed=12, anomaly_fraction=0.5)
    code, out = run_train(tmp_path, train_file)
    assert code == 0
    return out / "model.json", test_file


def test_eval_writes_reports(tmp_path, trained, capsys):
    model_path, test_file = trained
    out = tmp_path / "eval_out"
    code = main(["eval", "--model", str(model_path), "--test", str(test_file),
                 "--split", "test+", "--out", str(out)])
    assert code == 0
    assert (out / "eval_test_plus.txt").exists()
    assert (out / "eval_test_plus.json").exists()
    assert (out / "sweep_test_plus.csv").exists()
    assert "accuracy" in capsys.readouterr().out

    payload = json.loads((out / "eval_test_plus.json").read_text())
    assert payload["split"] == "test+"
    assert payload["records"] == 120
    c = payload["metrics"]["confusion"]
    assert c["tp"] + c["fp"] + c["tn"] + c["fn"] == 120
    assert len(payload["baseline"]["baselines"]) == 8

    text = (out / "eval_test_plus.txt").read_text()
    assert "baseline comparison" in text and "NB Tree" in text

    sweep_lines = (out / "sweep_test_plus.csv").read_text().splitlines()
    assert sweep_lines[0].startswith("threshold,accuracy")
    assert len(sweep_lines) == 102  # header + default 101-point grid


def test_eval_deterministic_reports(tmp_path, trained):
    model_path, test_file = trained
    outs = []
    for name in ("e1", "e2"):
        out = tmp_path / name
        code = main(["eval", "--model", str(model_path), "--test", str(test_file),
                     "--split", "test+", "--out", str(out)])
        assert code == 0
        outs.append(out)
    for fname in ("eval_test_plus.txt", "eval_test_plus.json", "sweep_test_plus.csv"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


def test_eval_confusion_matches_library_path(tmp_path, trained):
    model_path, test_file = trained
    out = tmp_path / "e"
    code = main(["eval", "--model", str(model_path), "--test", str(test_file),
                 "--split", "test+", "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "eval_test_plus.json").read_text())

    from hdx.cli import restore_model
    from hdx.dataset import build_dataset, load_nslkdd
    from hdx.encoder import encode_packed
    from hdx.evaluate import compute_metrics
    from hdx.oneclass import classify_batch

    encoder, sim, _ = restore_model(load_model(model_path))
    ds, _ = build_dataset(load_nslkdd(test_file), encoder.feature_specs)
    words = encode_packed(encoder, ds.rows)
    labels, _, _ = classify_batch(sim, words)
    m = compute_metrics(labels, ds.labels)
    assert payload["metrics"]["accuracy"] == m.accuracy
    assert payload["metrics"]["confusion"]["tp"] == m.confusion.tp


def test_eval_mode_override(tmp_path, trained):
    model_path, test_file = trained
    out = tmp_path / "e"
    code = main(["eval", "--model", str(model_path), "--test", str(test_file),
                 "--split", "test+", "--out", str(out),
                 "--mode", "absolute", "--threshold", "0.9"])
    assert code == 0
    payload = json.loads((out / "eval_test_plus.json").read_text())
    assert payload["model_config"]["mode"] == "absolute"
    assert payload["model_config"]["threshold"] == 0.9


def test_eval_requires_split(tmp_path, trained, capsys):
    model_path, test_file = trained
    code = main(["eval", "--model", str(model_path), "--test", str(test_file),
                 "--out", str(tmp_path / "e")])
    assert code == EXIT_CONFIG


def test_eval_schema_mismatch_exit_code(tmp_path, trained, capsys):
    model_path, test_file = trained
    payload = load_model(model_path)
    payload["feature_specs"] = payload["feature_specs"][:40]
    doctored = tmp_path / "doctored.json"
    write_model(doctored, payload)
    code = main(["eval", "--model", str(doctored), "--test", str(test_file),
                 "--split", "test+", "--out", str(tmp_path / "e")])
    assert code == EXIT_SCHEMA
    err = capsys.readouterr().err
    assert "40" in err and "41" in err


def test_eval_corrupt_model_file(tmp_path, trained, capsys):
    _, test_file = trained
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code = main(["eval", "--model", str(bad), "--test", str(test_file),
                 "--split", "test+", "--out", str(tmp_path / "e")])
    assert code == EXIT_PARSE


def test_model_round_trip_byte_identical(tmp_path, trained):
    model_path, _ = trained
    payload = load_model(model_path)
    copy_path = tmp_path / "copy.json"
    write_model(copy_path, payload)
    assert copy_path.read_bytes() == model_path.read_bytes()


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_single_threshold(tmp_path, trained, capsys):
    model_path, test_file = trained
    out = tmp_path / "s"
    code = main(["sweep", "--model", str(model_path), "--test", str(test_file),
                 "--out", str(out), "--grid", "0.5"])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 2
    assert "best threshold" in capsys.readouterr().out


def test_sweep_default_grid_101(tmp_path, trained):
    model_path, test_file = trained
    out = tmp_path / "s"
    code = main(["sweep", "--model", str(model_path), "--test", str(test_file),
                 "--out", str(out)])
    assert code == 0
    assert len((out / "sweep.csv").read_text().splitlines()) == 102


def test_sweep_linspace_grid(tmp_path, trained):
    model_path, test_file = trained
    out = tmp_path / "s"
    code = main(["sweep", "--model", str(model_path), "--test", str(test_file),
                 "--out", str(out), "--grid", "0:1:11"])
    assert code == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 12
    assert lines[1].startswith("0.0,")


def test_sweep_bad_grid(tmp_path, trained, capsys):
    model_path, test_file = trained
    code = main(["sweep", "--model", str(model_path), "--test", str(test_file),
                 "--out", str(tmp_path / "s"), "--grid", "a:b"])
    assert code == EXIT_CONFIG
