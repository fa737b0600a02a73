import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narfix.editlabel import (
    Edit, MalformedScript, RepairAction, RepairLabels, apply_labels, apply_script, canonicalize,
    edit_distance, edit_script, label_pair, script_cost, to_repair_labels,
)
from oracles import levenshtein
from conftest import PAPER_BUGGY, PAPER_FIXED

K, R, I, D = RepairAction.KEEP, RepairAction.REPLACE, RepairAction.INSERT, RepairAction.DELETE
seqs = st.lists(st.sampled_from("abcd"), max_size=9)


def test_worked_example_actions_and_lengths():
    labels = label_pair(PAPER_BUGGY, PAPER_FIXED)
    assert labels.actions == (K, K, I, R, R, I)
    assert labels.lengths == (1, 1, 2, 1, 1, 3)
    assert sum(labels.lengths) == len(PAPER_FIXED) == 9
    assert apply_labels(PAPER_BUGGY, labels) == PAPER_FIXED


def test_identical_pair_all_keep():
    s = list("abcab")
    script = edit_script(s, s)
    assert all(e.op == "match" for e in script) and script_cost(script) == 0
    labels = label_pair(s, s)
    assert set(labels.actions) == {K} and set(labels.lengths) == {1}


def test_deletion_only():
    labels = label_pair(["a"], [])
    assert labels.actions == (D,) and labels.lengths == (0,)


def test_all_keep_and_all_delete_labels():
    buggy = ["x", "y"]
    keep = RepairLabels((K, K), (1, 1), (("x",), ("y",)))
    assert apply_labels(buggy, keep) == buggy
    gone = RepairLabels((D, D), (0, 0), ((), ()))
    assert apply_labels(buggy, gone) == []


def test_apply_labels_arity_mismatch():
    with pytest.raises(ValueError):
        apply_labels(["a", "b"], label_pair(["a"], ["a"]))


def test_tie_order_prefers_match_then_substitute():
    # a -> b could be del+ins or sub; the cheaper sub is the only minimal choice
    assert [e.op for e in edit_script(["a"], ["b"])] == ["sub"]
    # the earliest alignment wins for a repeated token
    assert edit_script(["a"], ["a", "a"])[0] == Edit("match", 0, 0)


def test_canonicalize_pairs_gaps():
    script = [Edit("del", 0, None), Edit("ins", None, 0), Edit("match", 1, 1)]
    assert canonicalize(script) == [Edit("sub", 0, 0), Edit("match", 1, 1)]


def test_malformed_script_rejected():
    with pytest.raises(MalformedScript):
        to_repair_labels([Edit("match", 0, 0)], ["a"], ["b"])
    with pytest.raises(MalformedScript):
        to_repair_labels([Edit("match", 0, 0)], ["a", "b"], ["a"])


def test_action_label_strings():
    assert RepairAction.parse("insert") is I
    assert label_pair(PAPER_BUGGY, PAPER_FIXED).to_json()["actions"] == \
        ["keep", "keep", "insert", "replace", "replace", "insert"]


@settings(max_examples=400, deadline=None)
@given(seqs, seqs)
def test_script_is_minimal_and_reconstructs(a, b):
    script = edit_script(a, b)
    assert script_cost(script) == levenshtein(a, b) == edit_distance(a, b)
    assert apply_script(script, a, b) == b


@settings(max_examples=400, deadline=None)
@given(seqs, seqs)
def test_labels_roundtrip_and_length_rules(a, b):
    if not a:
        return
    labels = label_pair(a, b)
    assert apply_labels(a, labels) == b
    for act, n in zip(labels.actions, labels.lengths):
        if act in (K, R):
            assert n == 1
        elif act is D:
            assert n == 0
        else:
            assert n >= 2


def test_insert_into_empty_buggy_is_malformed():
    with pytest.raises(MalformedScript):
        label_pair([], ["a"])


def test_random_corpus_pairs_roundtrip(labeled_small):
    for rec in labeled_small:
        labels = label_pair(rec["buggy"], rec["fixed"])
        assert apply_labels(rec["buggy"], labels) == rec["fixed"]
        assert [a.label for a in labels.actions] == rec["actions"]


def test_substitution_at_random_position():
    rng = random.Random(0)
    for _ in range(50):
        s = [rng.choice("abc") for _ in range(8)]
        t = list(s)
        i = rng.randrange(8)
        t[i] = "z"
        labels = label_pair(s, t)
        assert labels.actions[i] is R
        assert sum(a is not K for a in labels.actions) == 1
