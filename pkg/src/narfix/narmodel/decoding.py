"""Retention, masking and merge rules of two-stage decoding.

These act on probability tensors only, so they are shared by training
(gold actions) and inference (predicted actions).
"""
from __future__ import annotations

from dataclasses import dataclass

import torch

from narfix.editlabel import RepairAction


def consistency(tokens, src_tokens, actions, offsets):
    """Whether each stage-1 token agrees with its source token's repair action.

    keep -> token equals the source token; replace at offset 0 -> token
    differs from it; insert positions and later fragment offsets always agree.
    ``actions=None`` (no action predictor) makes every position consistent.
    """
    if actions is None:
        return torch.ones_like(tokens, dtype=torch.bool)
    same = tokens == src_tokens
    keep = actions == int(RepairAction.KEEP)
    replace0 = (actions == int(RepairAction.REPLACE)) & (offsets == 0)
    return torch.where(keep, same, torch.where(replace0, ~same, torch.ones_like(same)))


def retention_mask(p_first, src_tokens, actions, offsets, tau, valid=None):
    """Retained positions: consistent with the action and max probability above ``tau``."""
    conf, tokens = p_first.max(dim=-1)
    keep = consistency(tokens, src_tokens, actions, offsets) & (conf > tau)
    if valid is not None:
        keep &= valid
    return keep


def merge_stages(p_first, p_second, retained, hard_copy=None, copy_tokens=None):
    """Stage-1 argmax where retained, stage-2 argmax elsewhere, then keep hard-copy."""
    first = p_first.argmax(-1)
    final = first if p_second is None else torch.where(retained, first, p_second.argmax(-1))
    if hard_copy is not None:
        final = torch.where(hard_copy, copy_tokens, final)
    return final


@dataclass
class DecodeTrace:
    p_first: torch.Tensor  # (m, V)
    retained: list[int]
    masked: list[int]
    p_second: torch.Tensor | None  # (m, V); None when two-stage decoding is off
    final: list[int]
    hard_copied: list[int]

    def check(self, m: int) -> None:
        r, k = set(self.retained), set(self.masked)
        if r & k or (r | k) != set(range(m)):
            raise AssertionError("retained/masked do not partition the target positions")
