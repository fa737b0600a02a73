"""Cosine similarity between parent-node class embeddings and token features, by AST distance."""
from __future__ import annotations

import csv
import io

import numpy as np
import torch

from narfix.depmat import nca_matrix
from narfix.toylang.parser import parse


def cosine(u, v) -> float:
    u, v = np.asarray(u, dtype=np.float64), np.asarray(v, dtype=np.float64)
    den = np.linalg.norm(u) * np.linalg.norm(v)
    return float(u @ v / den) if den > 0 else 0.0


def tree_distance(ast, a: int, b: int) -> int:
    pa, pb = ast.path_to_root(a), ast.path_to_root(b)
    common = set(pa) & set(pb)
    lca = next(n for n in pa if n in common)
    return pa.index(lca) + pb.index(lca)


def program_similarities(net, vocab, tokens, max_distance: int = 4, center: bool = True):
    """``(distance, cosine)`` for each parent in the program's matrix and each token.

    Token features are the extractor's keys. With ``center`` the program's
    mean key is subtracted first: it adds the same amount to a parent's score
    for every token, so only the remainder says which tokens a parent prefers.
    """
    ast = parse(tokens)
    matrix, table = nca_matrix(ast, net.cfg.p_max)
    classes = net.extractor.class_embedding().detach()
    _, _, _, K = net.dependency_logits(vocab.encode(tokens), [1] * len(tokens))
    if center:
        K = K - K.mean(0)
    out = []
    for cls in sorted(set(int(c) for c in np.unique(matrix) if c >= 0)):
        node = table.nodes[cls]
        for pos, leaf in enumerate(ast.leaves):
            d = tree_distance(ast, node, leaf)
            if 1 <= d <= max_distance:
                out.append((d, cosine(classes[cls].numpy(), K[ast.nodes[leaf].token_index].numpy())))
    return out


def analyze_similarity(net, vocab, programs, max_distance: int = 4, center: bool = True) -> list[dict]:
    """Mean/std/count of parent-token cosine similarity per AST distance."""
    if net.extractor is None:
        raise ValueError("similarity analysis needs the dependency extractor")
    net.eval()
    by_d = {d: [] for d in range(1, max_distance + 1)}
    with torch.no_grad():
        for tokens in programs:
            for d, c in program_similarities(net, vocab, list(tokens), max_distance, center):
                by_d[d].append(c)
    rows = []
    for d, vals in by_d.items():
        rows.append({"distance": d, "count": len(vals),
                     "mean": float(np.mean(vals)) if vals else None,
                     "std": float(np.std(vals)) if vals else None})
    return rows


def similarity_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distance", "count", "mean_cosine", "std_cosine"])
    for r in rows:
        w.writerow([r["distance"], r["count"]] +
                   ["n/a" if r[k] is None else f"{r[k]:.6f}" for k in ("mean", "std")])
    return buf.getvalue()
