"""Held-out metrics: predictor accuracy by input length, exact-match repair and over-correction."""
from __future__ import annotations

import csv
import io

import numpy as np
import torch

from narfix.editlabel import RepairAction, edit_script
from narfix.pipeline.repair import generate_candidates, validate_patch

BUCKETS = (("N<=10", 0, 10), ("10<N<=20", 10, 20), ("20<N<=50", 20, 50), ("N>50", 50, None))


def bucket_of(n: int) -> str:
    for name, lo, hi in BUCKETS:
        if n > lo and (hi is None or n <= hi):
            return name
    return BUCKETS[0][0]


def predictor_outputs(net, vocab, buggy):
    """Argmax actions (or None) and lengths for one buggy sequence."""
    _, _, act_logp, len_logp = net.encode_and_predict(vocab.encode(buggy))
    actions = None if act_logp is None else [RepairAction(int(a)) for a in act_logp.argmax(-1)]
    return actions, [int(l) for l in len_logp.argmax(-1)]


def predictor_table(records, predictions) -> list[dict]:
    """Token-level action and length accuracy per bucket of buggy length.

    ``predictions`` is a list of ``(actions, lengths)`` aligned with
    ``records``; actions may be None for a model without action head.
    The average row is the unweighted mean over non-empty buckets.
    """
    tallies = {name: [0, 0, 0, 0] for name, _, _ in BUCKETS}  # act hits, len hits, tokens, bugs
    for rec, (actions, lengths) in zip(records, predictions):
        t = tallies[bucket_of(len(rec["buggy"]))]
        gold_a = [RepairAction.parse(a) for a in rec["actions"]]
        if actions is not None:
            t[0] += sum(int(p == g) for p, g in zip(actions, gold_a))
        t[1] += sum(int(p == g) for p, g in zip(lengths, rec["lengths"]))
        t[2] += len(rec["buggy"])
        t[3] += 1
    has_actions = any(p[0] is not None for p in predictions)
    rows = []
    for name, _, _ in BUCKETS:
        a, l, n, bugs = tallies[name]
        if n == 0:
            rows.append({"bucket": name, "count": 0, "action_acc": None, "length_acc": None})
        else:
            rows.append({"bucket": name, "count": bugs,
                         "action_acc": a / n if has_actions else None, "length_acc": l / n})
    filled = [r for r in rows if r["count"]]
    avg = {"bucket": "average", "count": sum(r["count"] for r in rows)}
    for key in ("action_acc", "length_acc"):
        vals = [r[key] for r in filled if r[key] is not None]
        avg[key] = float(np.mean(vals)) if vals else None
    rows.append(avg)
    return rows


def eval_predictor(net, vocab, records) -> list[dict]:
    with torch.no_grad():
        preds = [predictor_outputs(net, vocab, r["buggy"]) for r in records]
    return predictor_table(records, preds)


def table_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bucket", "count", "action_acc", "length_acc"])
    for r in rows:
        w.writerow([r["bucket"], r["count"]] +
                   ["n/a" if r[k] is None else f"{r[k]:.4f}" for k in ("action_acc", "length_acc")])
    return buf.getvalue()


def majority_action_accuracy(records) -> float:
    """Accuracy of predicting keep everywhere."""
    keep = sum(a == "keep" for r in records for a in r["actions"])
    return keep / sum(len(r["actions"]) for r in records)


def overcorrected_tokens(candidate, buggy, actions) -> int:
    """Gold-keep buggy tokens that the candidate does not carry over unchanged."""
    kept = {e.src for e in edit_script(list(buggy), list(candidate)) if e.op == "match"}
    gold = [RepairAction.parse(a) if isinstance(a, str) else RepairAction(a) for a in actions]
    return sum(1 for i, a in enumerate(gold) if a == RepairAction.KEEP and i not in kept)


def count_overcorrections(candidates, buggy, fixed, labels) -> float:
    """Mean over-corrected token count across ``candidates`` (0 for an empty list)."""
    if not candidates:
        return 0.0
    return float(np.mean([overcorrected_tokens(c, buggy, labels) for c in candidates]))


def evaluate_repair(net, vocab, records, k: int = 16) -> dict:
    """Top-k exact match, no-op baseline and mean over-correction of the top-k lists."""
    hits, noop, over = 0, 0, []
    for rec in records:
        cands = generate_candidates(net, vocab, rec["buggy"], k)
        toks = [c.tokens for c in cands]
        hits += any(validate_patch(t, rec["fixed"]) for t in toks)
        noop += validate_patch(rec["buggy"], rec["fixed"])
        over.append(count_overcorrections(toks, rec["buggy"], rec["fixed"], rec["actions"]))
    n = max(1, len(records))
    return {"n": len(records), "k": k, "exact_match": hits / n, "noop_baseline": noop / n,
            "overcorrections": float(np.mean(over)) if over else 0.0}
