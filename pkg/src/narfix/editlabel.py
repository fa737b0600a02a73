"""Repair-action labels from minimal edit scripts.

Each buggy token receives one of four actions and a repair length (the
number of fixed-code tokens it expands into). Inserted tokens are attached
to the next aligned buggy token, so ``if ( result != null )`` ->
``if ( ! result . isNotype ( ) )`` labels as
keep, keep, insert, replace, replace, insert with lengths 1, 1, 2, 1, 1, 3.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple


class RepairAction(enum.IntEnum):
    KEEP = 0
    REPLACE = 1
    INSERT = 2
    DELETE = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, name: str) -> RepairAction:
        return cls[name.upper()]


class Edit(NamedTuple):
    op: str  # "match" | "sub" | "del" | "ins"
    src: int | None
    tgt: int | None


class MalformedScript(ValueError):
    pass


@dataclass(frozen=True)
class RepairLabels:
    actions: tuple[RepairAction, ...]
    lengths: tuple[int, ...]
    fragments: tuple[tuple[str, ...], ...]

    def __len__(self):
        return len(self.actions)

    def to_json(self) -> dict:
        return {"actions": [a.label for a in self.actions], "lengths": list(self.lengths)}


def suffix_table(buggy, fixed) -> list[list[int]]:
    """``table[i][j]`` is the Levenshtein distance between ``buggy[i:]`` and ``fixed[j:]``."""
    n, m = len(buggy), len(fixed)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][m] = n - i
    for j in range(m + 1):
        table[n][j] = m - j
    for i in range(n - 1, -1, -1):
        row, nxt = table[i], table[i + 1]
        bi = buggy[i]
        for j in range(m - 1, -1, -1):
            row[j] = min(nxt[j + 1] + (bi != fixed[j]), nxt[j] + 1, row[j + 1] + 1)
    return table


def edit_distance(buggy, fixed) -> int:
    return suffix_table(buggy, fixed)[0][0]


def edit_script(buggy, fixed) -> list[Edit]:
    """Minimal unit-cost script turning ``buggy`` into ``fixed``.

    The trace runs left to right; ties prefer match, then substitute,
    delete, insert, so tokens align as early as possible.
    """
    table = suffix_table(buggy, fixed)
    n, m = len(buggy), len(fixed)
    i = j = 0
    script = []
    while i < n or j < m:
        here = table[i][j]
        if i < n and j < m and buggy[i] == fixed[j] and table[i + 1][j + 1] == here:
            script.append(Edit("match", i, j))
            i, j = i + 1, j + 1
        elif i < n and j < m and table[i + 1][j + 1] + 1 == here:
            script.append(Edit("sub", i, j))
            i, j = i + 1, j + 1
        elif i < n and table[i + 1][j] + 1 == here:
            script.append(Edit("del", i, None))
            i += 1
        else:
            script.append(Edit("ins", None, j))
            j += 1
    return script


def script_cost(script) -> int:
    return sum(e.op != "match" for e in script)


def apply_script(script, buggy, fixed) -> list[str]:
    out = []
    for e in script:
        if e.op == "match":
            out.append(buggy[e.src])
        elif e.op in ("sub", "ins"):
            out.append(fixed[e.tgt])
    return out


def canonicalize(script) -> list[Edit]:
    """Pair deletes with inserts inside each unaligned gap, turning them into substitutes."""
    out: list[Edit] = []
    gap: list[Edit] = []

    def flush():
        dels = [e for e in gap if e.op == "del"]
        ins = [e for e in gap if e.op == "ins"]
        paired = min(len(dels), len(ins))
        out.extend(Edit("sub", d.src, s.tgt) for d, s in zip(dels, ins))
        out.extend(dels[paired:])
        out.extend(ins[paired:])
        gap.clear()

    for e in script:
        if e.op in ("del", "ins"):
            gap.append(e)
        else:
            flush()
            out.append(e)
    flush()
    return out


def _check_script(script, buggy, fixed):
    srcs = [e.src for e in script if e.op != "ins"]
    tgts = [e.tgt for e in script if e.op != "del"]
    if srcs != list(range(len(buggy))) or tgts != list(range(len(fixed))):
        raise MalformedScript("script does not cover both sequences in order")
    for e in script:
        if e.op == "match" and buggy[e.src] != fixed[e.tgt]:
            raise MalformedScript(f"match of unequal tokens at {e.src}/{e.tgt}")
    if apply_script(script, buggy, fixed) != list(fixed):
        raise MalformedScript("script does not reconstruct the fixed sequence")


def to_repair_labels(script, buggy, fixed) -> RepairLabels:
    _check_script(script, buggy, fixed)
    script = canonicalize(script)
    actions: list[RepairAction | None] = [None] * len(buggy)
    frags: list[list[str]] = [[] for _ in buggy]
    pending: list[str] = []
    last_aligned = None
    for e in script:
        if e.op == "ins":
            pending.append(fixed[e.tgt])
        elif e.op == "del":
            actions[e.src] = RepairAction.DELETE
        else:
            frags[e.src] = pending + [fixed[e.tgt]]
            if pending:
                actions[e.src] = RepairAction.INSERT
            elif e.op == "match":
                actions[e.src] = RepairAction.KEEP
            else:
                actions[e.src] = RepairAction.REPLACE
            pending = []
            last_aligned = e.src
    if pending:
        if last_aligned is None:
            raise MalformedScript("insertions with no buggy token to attach to")
        frags[last_aligned].extend(pending)
        actions[last_aligned] = RepairAction.INSERT
    return RepairLabels(
        tuple(actions), tuple(len(f) for f in frags), tuple(tuple(f) for f in frags)
    )


def label_pair(buggy, fixed) -> RepairLabels:
    return to_repair_labels(edit_script(buggy, fixed), buggy, fixed)


def apply_labels(buggy, labels: RepairLabels) -> list[str]:
    if len(labels.actions) != len(buggy) or len(labels.fragments) != len(buggy):
        raise ValueError(f"label arity {len(labels.actions)} != sequence length {len(buggy)}")
    out = []
    for frag in labels.fragments:
        out.extend(frag)
    return out
