import json

import pytest
import torch

from narfix.labeling import label_records, read_labeled, write_labeled
from narfix.narmodel import ARRepairNet, ModelConfig, NARRepairNet
from narfix.pipeline.bench import ConfigMismatch, bench_latency
from narfix.pipeline.checkpoint import load_model, save_model
from narfix.pipeline.evaluate import (
    count_overcorrections, eval_predictor, majority_action_accuracy, overcorrected_tokens,
    predictor_table, table_to_csv,
)
from narfix.pipeline.repair import decode_trace, generate_candidates, validate_patch
from narfix.pipeline.similarity import analyze_similarity, cosine, similarity_csv, tree_distance
from narfix.pipeline.train import TrainConfig, make_batches, train_model
from narfix.toylang import parse, tokenize


@pytest.fixture(scope="module")
def trained(labeled_small, small_vocab):
    cfg = ModelConfig(d_model=16, n_enc=1, n_dec=2, k_split=1, n_heads=2, d_ff=32, dropout=0.0)
    net = NARRepairNet(cfg, len(small_vocab), seed=0)
    train_model(net, labeled_small[:20], small_vocab, TrainConfig(epochs=2, batch_size=10, warmup=2), 0)
    return net


def _losses(net, records, vocab, tcfg, **kw):
    seen = []
    train_model(net, records, vocab, tcfg, 3, on_batch=lambda l, b: seen.append(l.total.item()), **kw)
    return seen


def test_training_is_deterministic(tiny_cfg, labeled_small, small_vocab):
    tcfg = TrainConfig(epochs=2, batch_size=8, warmup=2)
    a = _losses(NARRepairNet(tiny_cfg, len(small_vocab), seed=0), labeled_small[:24], small_vocab, tcfg)
    b = _losses(NARRepairNet(tiny_cfg, len(small_vocab), seed=0), labeled_small[:24], small_vocab, tcfg)
    assert a == b


def test_resume_matches_uninterrupted(tmp_path, labeled_small, small_vocab):
    cfg = ModelConfig(d_model=16, n_enc=1, n_dec=2, k_split=1, n_heads=2, d_ff=32, dropout=0.1)
    tcfg = TrainConfig(epochs=2, batch_size=8, warmup=2)
    recs = labeled_small[:24]
    full = _losses(NARRepairNet(cfg, len(small_vocab), seed=0), recs, small_vocab, tcfg)
    ckpt = tmp_path / "half.ckpt"
    first = _losses(NARRepairNet(cfg, len(small_vocab), seed=0), recs, small_vocab, tcfg,
                    ckpt_path=ckpt, stop_after_epochs=1)
    second = _losses(NARRepairNet(cfg, len(small_vocab), seed=5), recs, small_vocab, tcfg,
                     resume_from=ckpt)
    assert first == full[: len(first)]
    assert second[0] == full[len(first)]
    assert second == full[len(first):]


def test_training_log_and_divergence_guard(tmp_path, tiny_cfg, labeled_small, small_vocab):
    log = tmp_path / "log.jsonl"
    net = NARRepairNet(tiny_cfg, len(small_vocab))
    rows = train_model(net, labeled_small[:10], small_vocab, TrainConfig(epochs=2, batch_size=5), 0,
                       log_path=log)
    lines = [json.loads(x) for x in log.read_text().splitlines()]
    assert len(lines) == 2 == len(rows)
    assert set(lines[0]) == {"epoch", "L_total", "L_dec", "L_act", "L_len", "L_depend", "lr"}
    with torch.no_grad():
        net.out_proj.weight.fill_(float("nan"))
    with pytest.raises(FloatingPointError):
        train_model(net, labeled_small[:10], small_vocab, TrainConfig(epochs=1, batch_size=5), 0)


def test_length_bucketed_batches_cover_everything(labeled_small):
    batches = make_batches(labeled_small, 7, seed=1, epoch=0)
    flat = sorted(i for b in batches for i in b)
    assert flat == list(range(len(labeled_small)))
    assert batches == make_batches(labeled_small, 7, seed=1, epoch=0)
    assert batches != make_batches(labeled_small, 7, seed=1, epoch=1)


def test_checkpoint_roundtrip_preserves_outputs(tmp_path, trained, small_vocab, labeled_small):
    path = tmp_path / "m.ckpt"
    save_model(path, trained, small_vocab)
    net, vocab, header, _ = load_model(path, expect_kind="nar")
    assert vocab == small_vocab and header["vocab_hash"] == small_vocab.digest()
    buggy = labeled_small[0]["buggy"]
    a = generate_candidates(trained, small_vocab, buggy, 4)
    b = generate_candidates(net, vocab, buggy, 4)
    assert [c.tokens for c in a] == [c.tokens for c in b]
    with pytest.raises(ValueError):
        load_model(path, expect_kind="ar")


def test_checkpoint_shape_mismatch(tmp_path, trained, small_vocab):
    path = tmp_path / "m.ckpt"
    save_model(path, trained, small_vocab)
    from narfix.nncore import load_checkpoint, save_checkpoint
    header, tensors = load_checkpoint(path)
    header["config"]["d_ff"] = 64
    save_checkpoint(path, header, tensors)
    with pytest.raises(ValueError, match="shape mismatch"):
        load_model(path)


def test_candidates_ranked_and_consistent(trained, small_vocab, labeled_small):
    buggy = labeled_small[1]["buggy"]
    many = generate_candidates(trained, small_vocab, buggy, 16)
    one = generate_candidates(trained, small_vocab, buggy, 1)
    assert 1 <= len(many) <= 16 and len({c.tokens for c in many}) == len(many)
    assert one[0].tokens == many[0].tokens
    for c in many:
        assert abs(c.score - sum(c.components)) < 1e-6
    keys = [(-c.score, c.provenance) for c in many]
    assert keys == sorted(keys)
    assert generate_candidates(trained, small_vocab, buggy, 16) == many


def test_unknown_lexeme_still_repairs(trained, small_vocab, labeled_small):
    buggy = list(labeled_small[2]["buggy"])
    buggy[1] = "neverSeenName"
    cands = generate_candidates(trained, small_vocab, buggy, 16)
    assert len(cands) == 16


def test_decode_trace_partitions_positions(trained, small_vocab, labeled_small):
    rec = labeled_small[3]
    from narfix.editlabel import RepairAction
    acts = [RepairAction.parse(a) for a in rec["actions"]]
    trace = decode_trace(trained, small_vocab, rec["buggy"], acts, rec["lengths"])
    trace.check(len(rec["fixed"]))
    assert trained.decoder_passes >= 2


def test_validate_patch():
    assert validate_patch(["a", "b"], ["a", "b"])
    assert not validate_patch(["a", "b"], ["a", "c"])
    assert validate_patch([], [])


def test_overcorrection_counts():
    buggy = ["a", "b", "c", "d"]
    actions = ["keep", "replace", "keep", "keep"]
    fixed = ["a", "x", "c", "d"]
    assert overcorrected_tokens(fixed, buggy, actions) == 0
    assert overcorrected_tokens(["q", "x", "r", "d"], buggy, actions) == 2
    assert count_overcorrections([fixed, ["q", "x", "r", "d"]], buggy, fixed, actions) == 1.0
    assert count_overcorrections([], buggy, fixed, actions) == 0.0


def test_overcorrections_of_fixed_is_zero(labeled_small):
    for rec in labeled_small:
        assert count_overcorrections([rec["fixed"]], rec["buggy"], rec["fixed"], rec["actions"]) == 0


def test_predictor_table_gold_is_perfect(labeled_small):
    from narfix.editlabel import RepairAction
    preds = [([RepairAction.parse(a) for a in r["actions"]], r["lengths"]) for r in labeled_small]
    rows = predictor_table(labeled_small, preds)
    for r in rows:
        if r["count"]:
            assert r["action_acc"] == 1.0 and r["length_acc"] == 1.0
        else:
            assert r["action_acc"] is None
    assert "n/a" in table_to_csv(rows) or all(r["count"] for r in rows)
    assert rows[-1]["bucket"] == "average"


def test_predictor_table_average_is_unweighted_over_filled_buckets():
    recs = [{"buggy": ["t"] * 5, "actions": ["keep"] * 5, "lengths": [1] * 5},
            {"buggy": ["t"] * 15, "actions": ["keep"] * 15, "lengths": [1] * 15}]
    from narfix.editlabel import RepairAction
    preds = [([RepairAction.KEEP] * 5, [1] * 5), ([RepairAction.DELETE] * 15, [1] * 15)]
    rows = predictor_table(recs, preds)
    assert rows[-1]["action_acc"] == pytest.approx(0.5)
    assert rows[2]["action_acc"] is None and rows[3]["action_acc"] is None


def test_eval_predictor_runs(trained, small_vocab, labeled_small):
    rows = eval_predictor(trained, small_vocab, labeled_small[:10])
    assert len(rows) == 5
    assert 0 < majority_action_accuracy(labeled_small) < 1


def test_bench_smoke_and_mismatch(small_vocab):
    cfg = ModelConfig(d_model=16, n_enc=1, n_dec=2, k_split=1, n_heads=2, d_ff=32, max_len=40)
    nar = NARRepairNet(cfg, len(small_vocab))
    ar = ARRepairNet(cfg, len(small_vocab))
    rows = bench_latency(nar, ar, [8, 16], trials=5)
    assert [(r.m, r.nar_passes, r.ar_passes) for r in rows] == [(8, 2, 8), (16, 2, 16)]
    other = ARRepairNet(ModelConfig(**{**cfg.to_dict(), "d_ff": 64}), len(small_vocab))
    with pytest.raises(ConfigMismatch):
        bench_latency(nar, other, [8])
    with pytest.raises(ValueError):
        bench_latency(nar, ar, [8], trials=3)


def test_similarity_pieces(trained, small_vocab, labeled_small):
    assert cosine([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0, abs=1e-6)
    ast = parse(tokenize("return a+b;"))
    binexpr = next(i for i, n in enumerate(ast.nodes) if n.label == "binary_expr")
    assert tree_distance(ast, binexpr, ast.leaves[1]) == 1
    assert tree_distance(ast, ast.leaves[1], ast.leaves[3]) == 2
    rows = analyze_similarity(trained, small_vocab, [r["fixed"] for r in labeled_small[:5]])
    assert [r["distance"] for r in rows] == [1, 2, 3, 4]
    assert similarity_csv(rows).startswith("distance,count")
    raw = analyze_similarity(trained, small_vocab, [r["fixed"] for r in labeled_small[:5]], center=False)
    assert [r["count"] for r in raw] == [r["count"] for r in rows]
    assert [r["mean"] for r in raw] != [r["mean"] for r in rows]


def test_centered_similarity_ignores_a_shared_key_offset(trained, small_vocab, labeled_small):
    from narfix.pipeline.similarity import program_similarities

    toks = labeled_small[0]["fixed"]
    before = program_similarities(trained, small_vocab, toks)
    wk = trained.extractor.wk
    # a bias on the key map shifts every key by the same vector
    shifted = torch.nn.Linear(wk.in_features, wk.out_features, bias=True)
    with torch.no_grad():
        shifted.weight.copy_(wk.weight)
        shifted.bias.normal_()
    trained.extractor.wk = shifted
    try:
        after = program_similarities(trained, small_vocab, toks)
        raw_after = program_similarities(trained, small_vocab, toks, center=False)
    finally:
        trained.extractor.wk = wk
    assert [d for d, _ in after] == [d for d, _ in before]
    assert all(abs(a - b) < 1e-5 for (_, a), (_, b) in zip(after, before))
    assert any(abs(a - b) > 1e-3 for (_, a), (_, b) in zip(raw_after, before))


def test_labeled_file_roundtrip(tmp_path, small_corpus):
    recs = label_records(small_corpus[:5], threads=2)
    assert recs == label_records(small_corpus[:5])
    write_labeled(recs, tmp_path / "l.jsonl")
    assert read_labeled(tmp_path / "l.jsonl") == recs
    (tmp_path / "bad.jsonl").write_text(json.dumps({"buggy": []}) + "\n")
    with pytest.raises(ValueError):
        read_labeled(tmp_path / "bad.jsonl")
