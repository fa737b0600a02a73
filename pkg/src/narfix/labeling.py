"""Turns corpus records into fully labeled training records (actions, lengths, dep)."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor

from narfix.depmat import DEFAULT_P_MAX, nca_matrix, to_sparse
from narfix.editlabel import label_pair
from narfix.toylang.parser import parse


def label_record(record: dict, p_max: int = DEFAULT_P_MAX) -> dict:
    buggy, fixed = record["buggy"], record["fixed"]
    labels = label_pair(buggy, fixed)
    matrix, _ = nca_matrix(parse(fixed), p_max)
    out = dict(record)
    out.update(labels.to_json())
    out["dep"] = to_sparse(matrix)
    return out


def label_records(records, p_max: int = DEFAULT_P_MAX, threads: int = 1) -> list[dict]:
    if threads <= 1:
        return [label_record(r, p_max) for r in records]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda r: label_record(r, p_max), records))


def write_labeled(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


REQUIRED_FIELDS = ("buggy", "fixed", "actions", "lengths", "dep")


def read_labeled(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            missing = [k for k in REQUIRED_FIELDS if k not in rec]
            if missing:
                raise ValueError(f"{path}:{lineno}: labeled record lacks {missing}")
            out.append(rec)
    return out
