"""The NARRepair network: encoder, action predictor, expansion, dependency extractor, two-stage decoder."""
from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from narfix.editlabel import RepairAction
from narfix.narmodel.config import ModelConfig
from narfix.narmodel.data import Batch
from narfix.narmodel.decoding import merge_stages, retention_mask
from narfix.narmodel.layers import NEG_INF, CrossAttentionBlock, DecoderLayer, Encoder, dropout
from narfix.nncore import cross_entropy, init_parameters, softmax
from narfix.toylang.vocab import MASK_ID

N_ACTIONS = len(RepairAction)


class RepairPredictor(nn.Module):
    """Shared 1-D convolution feeding an action head and a length head."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.conv = nn.Conv1d(cfg.d_model, cfg.d_model, cfg.conv_kernel, padding=cfg.conv_kernel // 2)
        self.act_head = nn.Linear(cfg.d_model, N_ACTIONS) if cfg.use_action_predictor else None
        self.len_head = nn.Linear(cfg.d_model, cfg.l_max)
        self.act = nn.ReLU()
        self.p_drop = cfg.dropout

    def forward(self, E, pad):
        x = E.masked_fill(pad[..., None], 0.0)
        feat = self.conv(x.transpose(1, 2)).transpose(1, 2)
        feat = dropout(self.act(feat), self.p_drop, self.training)
        act = self.act_head(feat) if self.act_head is not None else None
        return act, self.len_head(feat)


class DependencyExtractor(nn.Module):
    """Pairwise parent-node classifier plus attention fusion of the resulting features.

    Pair logits use a per-class bilinear form: ``Linear3`` maps every query to
    ``p_max`` vectors in key space, and each is dotted with every key.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        d = cfg.d_model
        self.wq = nn.Linear(d, d, bias=False)
        self.wk = nn.Linear(d, d, bias=False)
        self.wv = nn.Linear(d, d, bias=False)
        self.linear3 = nn.Linear(d, cfg.p_max * d)
        self.norm = nn.LayerNorm(d)
        self.p_max = cfg.p_max
        self.p_drop = cfg.dropout

    def class_embedding(self) -> torch.Tensor:
        """``(p_max, d)`` query-independent key-space vector of every parent-node class."""
        return self.linear3.bias.view(self.p_max, -1)

    def pair_logits(self, Q, K):
        B, m, d = Q.shape
        G = self.linear3(Q).view(B, m, self.p_max, d)
        return torch.einsum("bicd,bjd->bijc", G, K)

    def forward(self, D, pad, with_pairs=True):
        Q, K, V = self.wq(D), self.wk(D), self.wv(D)
        pairs = self.pair_logits(Q, K) if with_pairs else None
        scores = (Q @ K.transpose(1, 2)) / math.sqrt(D.shape[-1])
        score = softmax(scores.masked_fill(pad[:, None, :], NEG_INF), -1)
        fused = dropout(score @ V, self.p_drop, self.training)
        return pairs, self.norm(D + fused), score


@dataclass
class Outputs:
    act_logits: torch.Tensor | None
    len_logits: torch.Tensor
    pair_logits: torch.Tensor | None
    logits1: torch.Tensor
    logits2: torch.Tensor | None
    masked: torch.Tensor  # (B, m) positions re-decoded in stage 2


@dataclass
class Losses:
    total: torch.Tensor
    dec: torch.Tensor
    act: torch.Tensor
    len: torch.Tensor
    depend: torch.Tensor

    def as_floats(self) -> dict:
        return {"L_total": self.total.item(), "L_dec": self.dec.item(), "L_act": self.act.item(),
                "L_len": self.len.item(), "L_depend": self.depend.item()}


class NARRepairNet(nn.Module):
    def __init__(self, cfg: ModelConfig, vocab_size: int, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.encoder = Encoder(vocab_size, cfg)
        self.predictor = RepairPredictor(cfg)
        self.offset_emb = nn.Embedding(cfg.l_max + 1, cfg.d_model)
        self.tgt_pos_emb = nn.Embedding(cfg.max_len, cfg.d_model)
        self.expand_block = CrossAttentionBlock(cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.layer_dropout)
        self.extractor = DependencyExtractor(cfg) if cfg.use_dependency_extractor else None
        self.dec_layers = nn.ModuleList(
            DecoderLayer(cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.layer_dropout)
            for _ in range(cfg.n_dec)
        )
        self.out_proj = nn.Linear(cfg.d_model, vocab_size)
        init_parameters(self, seed)
        self.to(dtype=torch.float64 if cfg.precision == "f64" else torch.float32)
        self.decoder_passes = 0

    # -- components ---------------------------------------------------------

    def encode(self, src, src_pad):
        return self.encoder(src, src_pad)

    def predict_repair(self, E, src_pad):
        return self.predictor(E, src_pad)

    def expand_to_target(self, E, src_pad, exp_src, exp_off, tgt_pad):
        m = exp_src.shape[1]
        if m == 0:
            raise ValueError("empty target: every source token was deleted")
        if m > self.cfg.max_len:
            raise ValueError(f"target length {m} exceeds max_len={self.cfg.max_len}")
        idx = exp_src[..., None].expand(-1, -1, E.shape[-1])
        D0 = E.gather(1, idx) + self.offset_emb(exp_off) + self.tgt_pos_emb(torch.arange(m))[None]
        D0 = D0.masked_fill(tgt_pad[..., None], 0.0)
        return self.expand_block(D0, E, src_pad)

    def extract_and_fuse(self, D, tgt_pad, with_pairs=True):
        if self.extractor is None:
            return None, D, None
        return self.extractor(D, tgt_pad, with_pairs)

    def run_layers(self, layers, x, tgt_pad, E, src_pad):
        self.decoder_passes += 1
        for layer in layers:
            x = layer(x, tgt_pad, E, src_pad)
        return x

    def mask_features(self, h1, retained):
        m = h1.shape[1]
        mask = self.encoder.tok_emb.weight[MASK_ID] + self.tgt_pos_emb(torch.arange(m))
        return torch.where(retained[..., None], h1, mask[None].expand_as(h1))

    def decode(self, H, tgt_pad, E, src_pad, src_tok_tgt, act_tgt, off):
        """Both decoder stages; returns ``(logits1, logits2, retained)``."""
        cfg = self.cfg
        if not cfg.use_two_stage:
            h = self.run_layers(self.dec_layers, H, tgt_pad, E, src_pad)
            return self.out_proj(h), None, torch.zeros_like(tgt_pad)
        s1 = cfg.stage1_layers
        h1 = self.run_layers(self.dec_layers[:s1], H, tgt_pad, E, src_pad)
        logits1 = self.out_proj(h1)
        with torch.no_grad():
            p1 = softmax(logits1, -1)
            retained = retention_mask(p1, src_tok_tgt, act_tgt, off, cfg.tau, valid=~tgt_pad)
        h2 = self.run_layers(self.dec_layers[s1:], self.mask_features(h1, retained), tgt_pad, E, src_pad)
        return logits1, self.out_proj(h2), retained

    # -- training -----------------------------------------------------------

    def forward(self, batch: Batch) -> Outputs:
        E = self.encode(batch.src, batch.src_pad)
        act_logits, len_logits = self.predict_repair(E, batch.src_pad)
        D = self.expand_to_target(E, batch.src_pad, batch.exp_src, batch.exp_off, batch.tgt_pad)
        pairs, H, _ = self.extract_and_fuse(D, batch.tgt_pad)
        src_tok = batch.src.gather(1, batch.exp_src)
        act_tgt = None
        if self.cfg.use_action_predictor:
            act_tgt = batch.actions.clamp(min=0).gather(1, batch.exp_src)
        logits1, logits2, retained = self.decode(
            H, batch.tgt_pad, E, batch.src_pad, src_tok, act_tgt, batch.exp_off
        )
        masked = ~retained & ~batch.tgt_pad if logits2 is not None else torch.zeros_like(retained)
        return Outputs(act_logits, len_logits, pairs, logits1, logits2, masked)

    def compute_losses(self, out: Outputs, batch: Batch) -> Losses:
        cfg = self.cfg
        zero = out.len_logits.sum() * 0.0
        tgt = batch.tgt.masked_fill(batch.tgt_pad, -100)
        dec = cross_entropy(out.logits1, tgt)
        if out.logits2 is not None:
            dec = dec + cross_entropy(out.logits2, tgt.masked_fill(~out.masked, -100))
        act = cross_entropy(out.act_logits, batch.actions) if out.act_logits is not None else zero
        length = cross_entropy(out.len_logits, batch.lengths)
        depend = cross_entropy(out.pair_logits, batch.dep) if out.pair_logits is not None else zero
        total = dec + cfg.alpha * (act + length) + cfg.lam * depend
        return Losses(total, dec, act, length, depend)

    def loss(self, batch: Batch) -> Losses:
        return self.compute_losses(self(batch), batch)

    # -- inference ----------------------------------------------------------

    @torch.no_grad()
    def encode_and_predict(self, src_ids):
        src = torch.tensor([src_ids], dtype=torch.long)
        pad = torch.zeros_like(src, dtype=torch.bool)
        E = self.encode(src, pad)
        act, length = self.predict_repair(E, pad)
        act_logp = F.log_softmax(act[0], -1) if act is not None else None
        return E, pad, act_logp, F.log_softmax(length[0], -1)

    @torch.no_grad()
    def decode_variants(self, E, src_pad, src_ids, variants):
        """Run expansion, extraction and both decoder stages for a batch of
        (actions, lengths) variants of one source; returns per-variant tensors."""
        cfg = self.cfg
        maps = []
        for actions, lengths in variants:
            s, o = [], []
            for i, l in enumerate(lengths):
                s.extend([i] * l)
                o.extend(range(l))
            maps.append((s, [min(x, cfg.l_max) for x in o], actions))
        V = len(variants)
        m = max(len(s) for s, _, _ in maps)
        exp_src = torch.zeros(V, m, dtype=torch.long)
        exp_off = torch.zeros(V, m, dtype=torch.long)
        tgt_pad = torch.ones(V, m, dtype=torch.bool)
        act_src = torch.zeros(V, len(src_ids), dtype=torch.long)
        for v, (s, o, actions) in enumerate(maps):
            exp_src[v, : len(s)] = torch.tensor(s, dtype=torch.long)
            exp_off[v, : len(o)] = torch.tensor(o, dtype=torch.long)
            tgt_pad[v, : len(s)] = False
            if actions is not None:
                act_src[v] = torch.tensor([int(a) for a in actions], dtype=torch.long)
        Eb = E.expand(V, -1, -1)
        pad_b = src_pad.expand(V, -1)
        D = self.expand_to_target(Eb, pad_b, exp_src, exp_off, tgt_pad)
        _, H, _ = self.extract_and_fuse(D, tgt_pad, with_pairs=False)
        src_t = torch.tensor(src_ids, dtype=torch.long)[None].expand(V, -1)
        src_tok = src_t.gather(1, exp_src)
        act_tgt = act_src.gather(1, exp_src) if self.cfg.use_action_predictor else None
        logits1, logits2, retained = self.decode(H, tgt_pad, Eb, pad_b, src_tok, act_tgt, exp_off)
        p1 = softmax(logits1, -1)
        p2 = softmax(logits2, -1) if logits2 is not None else None
        hard = None
        if act_tgt is not None:
            hard = (act_tgt == int(RepairAction.KEEP)) & (exp_off == 0) & ~tgt_pad
        final = merge_stages(p1, p2, retained, hard, src_tok)
        return {
            "lengths": [len(s) for s, _, _ in maps],
            "p_first": p1, "p_second": p2, "retained": retained, "final": final,
            "hard_copy": hard, "src_tok": src_tok,
        }

    @torch.no_grad()
    def dependency_logits(self, src_ids, lengths):
        src = torch.tensor([src_ids], dtype=torch.long)
        pad = torch.zeros_like(src, dtype=torch.bool)
        E = self.encode(src, pad)
        s, o = [], []
        for i, l in enumerate(lengths):
            s.extend([i] * l)
            o.extend(range(l))
        exp_src = torch.tensor([s], dtype=torch.long)
        exp_off = torch.tensor([o], dtype=torch.long).clamp(max=self.cfg.l_max)
        tgt_pad = torch.zeros_like(exp_src, dtype=torch.bool)
        D = self.expand_to_target(E, pad, exp_src, exp_off, tgt_pad)
        if self.extractor is None:
            raise ValueError("dependency extractor is disabled in this model")
        Q, K = self.extractor.wq(D), self.extractor.wk(D)
        return self.extractor.pair_logits(Q, K)[0], D[0], Q[0], K[0]
