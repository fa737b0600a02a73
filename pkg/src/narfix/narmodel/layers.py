from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

from narfix.nncore import softmax

NEG_INF = -1e9


def dropout(x, p, training):
    return F.dropout(x, p, True) if training and p > 0 else x


class MultiHeadAttention(nn.Module):
    def __init__(self, d_model, n_heads):
        super().__init__()
        self.h = n_heads
        self.dk = d_model // n_heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.o = nn.Linear(d_model, d_model)

    def forward(self, x, mem, key_pad=None, causal=False):
        B, Lq, d = x.shape
        Lk = mem.shape[1]
        q = self.q(x).view(B, Lq, self.h, self.dk).transpose(1, 2)
        k = self.k(mem).view(B, Lk, self.h, self.dk).transpose(1, 2)
        v = self.v(mem).view(B, Lk, self.h, self.dk).transpose(1, 2)
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.dk)
        if key_pad is not None:
            scores = scores.masked_fill(key_pad[:, None, None, :], NEG_INF)
        if causal:
            future = torch.ones(Lq, Lk, dtype=torch.bool).triu(1 + Lk - Lq)
            scores = scores.masked_fill(future, NEG_INF)
        out = (softmax(scores, -1) @ v).transpose(1, 2).reshape(B, Lq, d)
        return self.o(out)


class FeedForward(nn.Module):
    def __init__(self, d_model, d_ff):
        super().__init__()
        self.fc1 = nn.Linear(d_model, d_ff)
        self.fc2 = nn.Linear(d_ff, d_model)
        self.act = nn.ReLU()

    def forward(self, x):
        return self.fc2(self.act(self.fc1(x)))


class EncoderLayer(nn.Module):
    """Self-attention and feed-forward sub-layers, each residual + layer norm."""

    def __init__(self, d_model, n_heads, d_ff, p_drop=0.0):
        super().__init__()
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.ff = FeedForward(d_model, d_ff)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.p_drop = p_drop

    def forward(self, x, pad):
        x = self.norm1(x + dropout(self.attn(x, x, pad), self.p_drop, self.training))
        return self.norm2(x + dropout(self.ff(x), self.p_drop, self.training))


class DecoderLayer(nn.Module):
    """Self-attention (bidirectional, or causal for the AR baseline), cross-attention, FFN."""

    def __init__(self, d_model, n_heads, d_ff, p_drop=0.0):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, n_heads)
        self.cross_attn = MultiHeadAttention(d_model, n_heads)
        self.ff = FeedForward(d_model, d_ff)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.norm3 = nn.LayerNorm(d_model)
        self.p_drop = p_drop

    def forward(self, x, tgt_pad, mem, mem_pad, causal=False):
        p, train = self.p_drop, self.training
        x = self.norm1(x + dropout(self.self_attn(x, x, tgt_pad, causal=causal), p, train))
        x = self.norm2(x + dropout(self.cross_attn(x, mem, mem_pad), p, train))
        return self.norm3(x + dropout(self.ff(x), p, train))


class CrossAttentionBlock(nn.Module):
    """One encoder-decoder attention block used to refine upsampled features."""

    def __init__(self, d_model, n_heads, d_ff, p_drop=0.0):
        super().__init__()
        self.cross_attn = MultiHeadAttention(d_model, n_heads)
        self.ff = FeedForward(d_model, d_ff)
        self.norm1 = nn.LayerNorm(d_model)
        self.norm2 = nn.LayerNorm(d_model)
        self.p_drop = p_drop

    def forward(self, x, mem, mem_pad):
        x = self.norm1(x + dropout(self.cross_attn(x, mem, mem_pad), self.p_drop, self.training))
        return self.norm2(x + dropout(self.ff(x), self.p_drop, self.training))


class Encoder(nn.Module):
    def __init__(self, vocab_size, cfg):
        super().__init__()
        self.tok_emb = nn.Embedding(vocab_size, cfg.d_model)
        self.pos_emb = nn.Embedding(cfg.max_len, cfg.d_model)
        self.layers = nn.ModuleList(
            EncoderLayer(cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.layer_dropout)
            for _ in range(cfg.n_enc)
        )
        self.p_drop = cfg.dropout
        self.max_len = cfg.max_len

    def forward(self, src, pad):
        n = src.shape[1]
        if n > self.max_len:
            raise ValueError(f"sequence length {n} exceeds max_len={self.max_len}")
        x = self.tok_emb(src) + self.pos_emb(torch.arange(n))[None]
        x = dropout(x, self.p_drop, self.training)
        for layer in self.layers:
            x = layer(x, pad)
        return x
