"""Batch collation for labeled records."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from narfix.depmat import IGNORE_INDEX, from_sparse
from narfix.editlabel import RepairAction
from narfix.toylang.vocab import PAD_ID


@dataclass
class Batch:
    src: torch.Tensor  # (B, n) token ids
    src_pad: torch.Tensor  # (B, n) bool
    actions: torch.Tensor  # (B, n), IGNORE_INDEX at padding
    lengths: torch.Tensor  # (B, n) length classes, IGNORE_INDEX at padding / overflow
    exp_src: torch.Tensor  # (B, m) source index of each target position
    exp_off: torch.Tensor  # (B, m) offset inside the source token's fragment
    tgt: torch.Tensor  # (B, m) gold fixed tokens, PAD at padding
    tgt_pad: torch.Tensor  # (B, m) bool
    dep: torch.Tensor  # (B, m, m), IGNORE_INDEX at padding

    def __len__(self):
        return self.src.shape[0]


def expansion_map(lengths) -> tuple[list[int], list[int]]:
    """Source index and fragment offset for each target position."""
    src, off = [], []
    for i, l in enumerate(lengths):
        src.extend([i] * l)
        off.extend(range(l))
    return src, off


def _pad(rows, width, fill):
    out = np.full((len(rows), width), fill, dtype=np.int64)
    for r, row in enumerate(rows):
        out[r, : len(row)] = row
    return torch.from_numpy(out)


def collate(records, vocab, l_max: int, max_len: int | None = None) -> Batch:
    srcs, acts, lens, esrc, eoff, tgts, deps = [], [], [], [], [], [], []
    for rec in records:
        buggy, fixed = rec["buggy"], rec["fixed"]
        if max_len is not None and max(len(buggy), len(fixed)) > max_len:
            raise ValueError(f"record longer than max_len={max_len}")
        lengths = list(rec["lengths"])
        if sum(lengths) != len(fixed):
            raise ValueError("repair lengths do not sum to the fixed length")
        srcs.append(vocab.encode(buggy))
        acts.append([int(RepairAction.parse(a)) for a in rec["actions"]])
        lens.append([l if l < l_max else IGNORE_INDEX for l in lengths])
        s, o = expansion_map(lengths)
        esrc.append(s)
        eoff.append([min(x, l_max) for x in o])
        tgts.append(vocab.encode(fixed))
        deps.append(from_sparse(rec["dep"], len(fixed)))
    n = max(1, max(len(s) for s in srcs))
    m = max(1, max(len(t) for t in tgts))
    dep = np.full((len(records), m, m), IGNORE_INDEX, dtype=np.int64)
    for b, d in enumerate(deps):
        dep[b, : d.shape[0], : d.shape[1]] = d
    src = _pad(srcs, n, PAD_ID)
    tgt = _pad(tgts, m, PAD_ID)
    return Batch(
        src=src,
        src_pad=_pad([[0] * len(s) for s in srcs], n, 1).bool(),
        actions=_pad(acts, n, IGNORE_INDEX),
        lengths=_pad(lens, n, IGNORE_INDEX),
        exp_src=_pad(esrc, m, 0),
        exp_off=_pad(eoff, m, 0),
        tgt=tgt,
        tgt_pad=_pad([[0] * len(t) for t in tgts], m, 1).bool(),
        dep=torch.from_numpy(dep),
    )
