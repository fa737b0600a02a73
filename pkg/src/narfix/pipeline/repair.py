"""Patch generation: length/action variants crossed with token alternatives."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import torch

from narfix.editlabel import RepairAction
from narfix.narmodel.decoding import DecodeTrace

DEFAULT_WIDTH = 16


class EmptyTargetError(ValueError):
    pass


@dataclass(frozen=True)
class PatchCandidate:
    tokens: tuple[str, ...]
    score: float
    components: tuple[float, float, float]  # token, action, length log-probabilities
    provenance: tuple[int, int]  # (length-variant id, token-combination id)
    actions: tuple | None = field(default=None, compare=False)
    lengths: tuple[int, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "score": self.score,
            "token_logprob": self.components[0],
            "action_logprob": self.components[1],
            "length_logprob": self.components[2],
            "provenance": list(self.provenance),
        }


def _token_options(act_logp, len_logp, i, l_max):
    """Ranked ``(logp, action, length, act_lp, len_lp)`` choices for source token ``i``."""
    opts = []
    if act_logp is None:
        for l in range(l_max):
            lp = float(len_logp[i, l])
            opts.append((lp, None, l, 0.0, lp))
    else:
        pairs = [(RepairAction.KEEP, 1), (RepairAction.REPLACE, 1), (RepairAction.DELETE, 0)]
        pairs += [(RepairAction.INSERT, l) for l in range(2, l_max)]
        for a, l in pairs:
            alp, llp = float(act_logp[i, int(a)]), float(len_logp[i, l])
            opts.append((alp + llp, a, l, alp, llp))
    opts.sort(key=lambda o: (-o[0], o[2], -1 if o[1] is None else int(o[1])))
    return opts


def _bits(count):
    return list(itertools.product((0, 1), repeat=count))


def length_variants(act_logp, len_logp, l_max, width):
    """Top-2 action/length choices at the ``ceil(log2 width)`` least certain positions."""
    n = len_logp.shape[0]
    options = [_token_options(act_logp, len_logp, i, l_max) for i in range(n)]
    margins = [(o[0][0] - o[1][0], i) for i, o in enumerate(options)]
    b = min(n, max(0, math.ceil(math.log2(width))))
    flexible = [i for _, i in sorted(margins)[:b]]
    variants = []
    for choice in _bits(len(flexible)):
        picked = [o[0] for o in options]
        for bit, i in zip(choice, flexible):
            picked[i] = options[i][bit]
        variants.append(picked)
    return variants


def _decode_batch(net, E, pad, ids, variants):
    use_actions = net.cfg.use_action_predictor
    batch = [([o[1] for o in v] if use_actions else None, [o[2] for o in v]) for v in variants]
    return net.decode_variants(E, pad, ids, batch)


def generate_candidates(net, vocab, buggy, k: int = DEFAULT_WIDTH, width: int = DEFAULT_WIDTH,
                        forced=None) -> list[PatchCandidate]:
    """Ranked, deduplicated candidate patches for one buggy sequence.

    The enumeration width is ``max(k, width)`` so that the top of a short list
    always equals the top of a longer one. ``forced=(actions, lengths)``
    bypasses the predictor (gold-action decoding).
    """
    net.eval()
    ids = vocab.encode(buggy)
    if len(ids) == 0:
        raise EmptyTargetError("empty input")
    if len(ids) > net.cfg.max_len:
        raise ValueError(f"input of {len(ids)} tokens exceeds max_len={net.cfg.max_len}")
    width = max(k, width)
    E, pad, act_logp, len_logp = net.encode_and_predict(ids)
    if forced is not None:
        actions, lengths = forced
        acts = [RepairAction(int(a)) if a is not None else None for a in actions] \
            if net.cfg.use_action_predictor else [None] * len(lengths)
        variants = [[(0.0, a, int(l), 0.0, 0.0) for a, l in zip(acts, lengths)]]
    else:
        variants = length_variants(act_logp, len_logp, net.cfg.l_max, width)
    keep_ids = [v for v, var in enumerate(variants)
                if 0 < sum(o[2] for o in var) <= net.cfg.max_len]
    if not keep_ids:
        return []
    out = _decode_batch(net, E, pad, ids, [variants[v] for v in keep_ids])
    b_tok = max(0, math.ceil(math.log2(width)))
    best: dict[tuple, PatchCandidate] = {}
    for row, vid in enumerate(keep_ids):
        var = variants[vid]
        m = out["lengths"][row]
        act_lp = sum(o[3] for o in var)
        len_lp = sum(o[4] for o in var)
        p1 = out["p_first"][row, :m]
        p2 = out["p_second"][row, :m] if out["p_second"] is not None else None
        retained = out["retained"][row, :m]
        final = out["final"][row, :m].clone()
        hard = out["hard_copy"][row, :m] if out["hard_copy"] is not None else torch.zeros(m, dtype=torch.bool)
        probs = p1 if p2 is None else torch.where(retained[:, None], p1, p2)
        logp = probs.clamp_min(1e-30).log()
        base_lp = torch.where(hard, logp.new_zeros(m), logp.gather(1, final[:, None]).squeeze(1))
        open_pos = [p for p in range(m) if not hard[p] and not retained[p]]
        if p2 is None:
            open_pos = [p for p in range(m) if not hard[p]]
        top2 = {}
        for p in open_pos:
            vals, toks = logp[p].topk(2)
            top2[p] = (float(vals[0] - vals[1]), [(int(toks[0]), float(vals[0])), (int(toks[1]), float(vals[1]))])
        flexible = [p for _, p in sorted((top2[p][0], p) for p in open_pos)[:b_tok]]
        for combo_id, choice in enumerate(_bits(len(flexible))):
            toks = final.tolist()
            tok_lp = float(base_lp.sum())
            for bit, p in zip(choice, flexible):
                tok, lp = top2[p][1][bit]
                tok_lp += lp - float(base_lp[p])
                toks[p] = tok
            text = tuple(vocab.decode(toks))
            score = tok_lp + act_lp + len_lp
            cand = PatchCandidate(text, score, (tok_lp, act_lp, len_lp), (vid, combo_id),
                                  tuple(o[1] for o in var), tuple(o[2] for o in var))
            prev = best.get(text)
            if prev is None or (-cand.score, cand.provenance) < (-prev.score, prev.provenance):
                best[text] = cand
    ranked = sorted(best.values(), key=lambda c: (-c.score, c.provenance))
    return ranked[:k]


def decode_trace(net, vocab, buggy, actions, lengths) -> DecodeTrace:
    """Single-variant decode exposing both stage distributions and the mask."""
    net.eval()
    ids = vocab.encode(buggy)
    E, pad, _, _ = net.encode_and_predict(ids)
    acts = list(actions) if net.cfg.use_action_predictor else None
    out = net.decode_variants(E, pad, ids, [(acts, list(lengths))])
    m = out["lengths"][0]
    retained = out["retained"][0, :m]
    hard = out["hard_copy"][0, :m] if out["hard_copy"] is not None else torch.zeros(m, dtype=torch.bool)
    return DecodeTrace(
        p_first=out["p_first"][0, :m],
        retained=[p for p in range(m) if retained[p]],
        masked=[p for p in range(m) if not retained[p]],
        p_second=None if out["p_second"] is None else out["p_second"][0, :m],
        final=out["final"][0, :m].tolist(),
        hard_copied=[p for p in range(m) if hard[p]],
    )


def validate_patch(candidate, reference) -> bool:
    return list(candidate) == list(reference)
