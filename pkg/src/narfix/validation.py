"""Input checks shared by the estimators and the pipeline entry points."""
from __future__ import annotations


def check_token_sequences(X) -> list[list[str]]:
    """Accept an iterable of token sequences (lists/tuples of str) or of space-joined strings."""
    if isinstance(X, (str, bytes)):
        raise TypeError("expected a collection of token sequences, got a single string")
    out = []
    for i, seq in enumerate(X):
        if isinstance(seq, str):
            seq = seq.split()
        seq = list(seq)
        if not all(isinstance(t, str) for t in seq):
            raise TypeError(f"sequence {i} contains non-string tokens")
        out.append(seq)
    return out


def check_pairs(X) -> list[dict]:
    """Records must carry ``buggy`` and ``fixed`` token lists."""
    out = []
    for i, rec in enumerate(X):
        if not isinstance(rec, dict) or "buggy" not in rec or "fixed" not in rec:
            raise ValueError(f"record {i} lacks 'buggy'/'fixed' fields")
        out.append(rec)
    return out
