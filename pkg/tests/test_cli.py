import json

import pytest

from narfix.cli import main, resolve_config, build_parser


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


TINY = {"model": {"d_model": 16, "n_enc": 1, "n_dec": 2, "k_split": 1, "n_heads": 2, "d_ff": 32,
                  "max_len": 128},
        "train": {"epochs": 1, "batch_size": 20, "warmup": 1}}


@pytest.fixture(scope="module")
def artifacts(workdir):
    cfg = workdir / "cfg.json"
    cfg.write_text(json.dumps(TINY))
    corpus = workdir / "corpus.jsonl"
    assert main(["gen-corpus", "--n", "40", "--seed", "7", "--out", str(corpus)]) == 0
    labeled = workdir / "labeled.jsonl"
    assert main(["label", "--input", str(corpus), "--out", str(labeled)]) == 0
    nar = workdir / "nar.bin"
    assert main(["train", "--config", str(cfg), "--input", str(labeled), "--out", str(nar)]) == 0
    ar = workdir / "ar.bin"
    assert main(["train", "--config", str(cfg), "--input", str(labeled), "--out", str(ar),
                 "--kind", "ar"]) == 0
    return {"cfg": cfg, "corpus": corpus, "labeled": labeled, "nar": nar, "ar": ar}


def test_gen_corpus_outputs(artifacts, workdir):
    assert (workdir / "corpus.vocab.json").exists()
    lines = artifacts["corpus"].read_text().splitlines()
    assert len(lines) == 40
    meta = json.loads((workdir / "corpus.jsonl.config.json").read_text())
    assert meta["corpus"]["n"] == 40 and meta["seed"] == 7


def test_gen_corpus_byte_identical(workdir):
    a, b = workdir / "a.jsonl", workdir / "b.jsonl"
    assert main(["gen-corpus", "--n", "30", "--seed", "3", "--out", str(a)]) == 0
    assert main(["gen-corpus", "--n", "30", "--seed", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_training_is_byte_identical(artifacts, workdir):
    again = workdir / "nar2.bin"
    assert main(["train", "--config", str(artifacts["cfg"]), "--input", str(artifacts["labeled"]),
                 "--out", str(again)]) == 0
    assert again.read_bytes() == artifacts["nar"].read_bytes()
    log = (workdir / "nar.bin.log.jsonl").read_text().splitlines()
    assert json.loads(log[0])["epoch"] == 1


def test_repair_prints_ranked_json(artifacts, workdir, capsys):
    bug = workdir / "bug.txt"
    rec = json.loads(artifacts["corpus"].read_text().splitlines()[0])
    bug.write_text(" ".join(rec["buggy"]) + "\n")
    code, out, _ = run(["repair", "--ckpt", str(artifacts["nar"]), "--input", str(bug), "--k", "16"],
                       capsys)
    assert code == 0
    body = json.loads(out)
    assert len(body["candidates"]) == 16
    scores = [c["score"] for c in body["candidates"]]
    assert scores == sorted(scores, reverse=True)
    assert body["config"]["k"] == 16


def test_bench_json(artifacts, capsys):
    code, out, _ = run(["bench", "--ckpt", str(artifacts["nar"]), "--ar-ckpt", str(artifacts["ar"]),
                        "--lengths", "8,16"], capsys)
    assert code == 0
    rows = json.loads(out)["report"]
    assert [(r["m"], r["nar_passes"], r["ar_passes"]) for r in rows] == [(8, 2, 8), (16, 2, 16)]
    assert set(rows[0]) == {"m", "nar_passes", "ar_passes", "nar_ms", "ar_ms", "ratio"}


def test_eval_and_analyze_csv(artifacts, workdir, capsys):
    code, out, _ = run(["eval", "--ckpt", str(artifacts["nar"]), "--input", str(artifacts["corpus"])],
                       capsys)
    assert code == 0 and out.splitlines()[0] == "bucket,count,action_acc,length_acc"
    target = workdir / "sim.csv"
    assert main(["analyze", "--ckpt", str(artifacts["nar"]), "--input", str(artifacts["corpus"]),
                 "--out", str(target)]) == 0
    assert target.read_text().startswith("distance,count,mean_cosine,std_cosine")


def test_precedence_flags_over_file_over_defaults(workdir):
    cfg = workdir / "p.json"
    cfg.write_text(json.dumps({"seed": 4, "k": 3, "model": {"tau": 0.5, "precision": "f64"}}))
    args = build_parser().parse_args(["repair", "--config", str(cfg), "--k", "9",
                                      "--precision", "f32", "--ablate", "dep", "--ablate", "action"])
    resolved = resolve_config(args)
    assert resolved["seed"] == 4 and resolved["k"] == 9
    assert resolved["model"]["tau"] == 0.5 and resolved["model"]["precision"] == "f32"
    assert not resolved["model"]["use_dependency_extractor"]
    assert not resolved["model"]["use_action_predictor"]
    assert resolved["model"]["use_two_stage"] and resolved["model"]["d_model"] == 64


@pytest.mark.parametrize("cmd", ["gen-corpus", "label", "train", "repair", "bench", "eval", "analyze"])
def test_help_exits_zero_and_lists_flags(cmd, capsys):
    code, out, _ = run([cmd, "--help"], capsys)
    assert code == 0
    for flag in ("--config", "--seed", "--out", "--n", "--ckpt", "--ar-ckpt", "--input", "--k",
                 "--lengths", "--threads", "--precision", "--ablate"):
        assert flag in out


def test_usage_errors_exit_one(capsys):
    assert run(["frobnicate"], capsys)[0] == 1
    assert run(["repair", "--bogus"], capsys)[0] == 1
    assert run([], capsys)[0] == 1
    code, _, err = run(["repair"], capsys)
    assert code == 1 and "needs --ckpt" in err


def test_runtime_errors_exit_two(workdir, capsys):
    code, _, err = run(["repair", "--ckpt", str(workdir / "missing.bin"), "--input", "x"], capsys)
    assert code == 2 and err


def test_log_level_env(monkeypatch, workdir):
    monkeypatch.setenv("NARFIX_LOG", "debug")
    assert main(["gen-corpus", "--n", "2", "--out", str(workdir / "tiny.jsonl")]) == 0
