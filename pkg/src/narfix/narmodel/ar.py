"""Left-to-right greedy baseline sharing the NAR model's layer/width configuration."""
from __future__ import annotations

import torch
from torch import nn

from narfix.narmodel.config import ModelConfig
from narfix.narmodel.layers import DecoderLayer, Encoder
from narfix.nncore import cross_entropy, init_parameters
from narfix.toylang.vocab import EOS_ID, PAD_ID


class ARRepairNet(nn.Module):
    def __init__(self, cfg: ModelConfig, vocab_size: int, seed: int = 0):
        super().__init__()
        self.cfg = cfg
        self.vocab_size = vocab_size
        self.encoder = Encoder(vocab_size, cfg)
        self.tgt_pos_emb = nn.Embedding(cfg.max_len, cfg.d_model)
        self.dec_layers = nn.ModuleList(
            DecoderLayer(cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.layer_dropout)
            for _ in range(cfg.n_dec)
        )
        self.out_proj = nn.Linear(cfg.d_model, vocab_size)
        init_parameters(self, seed)
        self.to(dtype=torch.float64 if cfg.precision == "f64" else torch.float32)
        self.decoder_passes = 0

    def decode_step(self, prefix, tgt_pad, E, src_pad):
        """One full decoder pass over ``prefix``; returns logits for every position."""
        self.decoder_passes += 1
        t = prefix.shape[1]
        if t > self.cfg.max_len:
            raise ValueError(f"decoder prefix {t} exceeds max_len={self.cfg.max_len}")
        x = self.encoder.tok_emb(prefix) + self.tgt_pos_emb(torch.arange(t))[None]
        for layer in self.dec_layers:
            x = layer(x, tgt_pad, E, src_pad, causal=True)
        return self.out_proj(x)

    def loss(self, src, src_pad, tgt, tgt_pad):
        """Teacher-forced CE of ``tgt + [EOS]`` given ``[EOS] + tgt`` as decoder input."""
        B = tgt.shape[0]
        eos = torch.full((B, 1), EOS_ID, dtype=torch.long)
        lengths = (~tgt_pad).sum(1)
        inp = torch.cat([eos, tgt], 1)
        out = torch.cat([tgt, torch.full((B, 1), PAD_ID, dtype=torch.long)], 1)
        out[torch.arange(B), lengths] = EOS_ID
        out_pad = torch.arange(out.shape[1])[None] > lengths[:, None]
        E = self.encoder(src, src_pad)
        logits = self.decode_step(inp, torch.cat([torch.zeros(B, 1, dtype=torch.bool), tgt_pad], 1), E, src_pad)
        return cross_entropy(logits, out.masked_fill(out_pad, -100))

    @torch.no_grad()
    def greedy(self, src_ids, max_steps: int, stop_at_eos: bool = True):
        """Returns ``(tokens, passes)``; one decoder pass per emitted symbol."""
        src = torch.tensor([src_ids], dtype=torch.long)
        pad = torch.zeros_like(src, dtype=torch.bool)
        E = self.encoder(src, pad)
        prefix = torch.tensor([[EOS_ID]], dtype=torch.long)
        out, passes = [], 0
        while passes < max_steps:
            logits = self.decode_step(prefix, torch.zeros_like(prefix, dtype=torch.bool), E, pad)
            passes += 1
            tok = int(logits[0, -1].argmax())
            if tok == EOS_ID and stop_at_eos:
                break
            out.append(tok)
            prefix = torch.cat([prefix, torch.tensor([[tok]])], 1)
        return out, passes
