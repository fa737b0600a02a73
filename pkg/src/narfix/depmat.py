"""Nearest-common-parent dependency matrices over the fixed program's AST."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from narfix.toylang.parser import Ast

IGNORE_INDEX = -100
DEFAULT_P_MAX = 64
INDEXING_MODES = ("instance", "type")  # "type": one class per node label, not implemented


class CapacityError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class ParentIndexTable:
    """Internal AST nodes in preorder; position in ``nodes`` is the class index."""

    nodes: tuple[int, ...]
    labels: tuple[str, ...]
    ignore_index: int = IGNORE_INDEX

    def index_of(self, node: int) -> int:
        return self.nodes.index(node)

    def __len__(self):
        return len(self.nodes)


def parent_index_table(ast: Ast, p_max: int = DEFAULT_P_MAX,
                       indexing: str = "instance") -> ParentIndexTable:
    if indexing not in INDEXING_MODES:
        raise ValueError(f"indexing must be one of {INDEXING_MODES}")
    if indexing == "type":
        raise NotImplementedError("classification over node type labels is not implemented")
    internal = ast.internal_nodes()
    if len(internal) > p_max:
        raise CapacityError(f"{len(internal)} internal nodes exceed P_max={p_max}")
    return ParentIndexTable(tuple(internal), tuple(ast.nodes[i].label for i in internal))


def leaf_alignment(ast: Ast, tokens) -> list[int]:
    """Map leaf rank -> token position; identity for parser output."""
    if len(ast.leaves) != len(tokens):
        raise AlignmentError(f"{len(ast.leaves)} leaves vs {len(tokens)} tokens")
    mapping = [ast.nodes[leaf].token_index for leaf in ast.leaves]
    if sorted(mapping) != list(range(len(tokens))):
        raise AlignmentError("leaves do not cover every token position exactly once")
    return mapping


def _leaf_spans(ast: Ast) -> dict[int, tuple[int, int]]:
    spans: dict[int, tuple[int, int]] = {}
    for node in reversed(range(len(ast.nodes))):  # children have larger ids
        n = ast.nodes[node]
        if n.is_leaf:
            spans[node] = (n.token_index, n.token_index)
        elif n.children:
            spans[node] = (spans[n.children[0]][0], spans[n.children[-1]][1])
    return spans


def nca_matrix(ast: Ast, p_max: int = DEFAULT_P_MAX,
               indexing: str = "instance") -> tuple[np.ndarray, ParentIndexTable]:
    """Matrix of nearest-common-parent class indices for every token pair.

    Each internal node covers a contiguous range of leaves, so painting node
    ranges in preorder (ancestors first) leaves the deepest common ancestor
    in every cell. The diagonal holds each leaf's immediate parent.
    """
    m = len(ast.leaves)
    if m == 0:
        raise ValueError("AST has no leaves")
    table = parent_index_table(ast, p_max, indexing)
    spans = _leaf_spans(ast)
    out = np.full((m, m), IGNORE_INDEX, dtype=np.int64)
    for cls, node in enumerate(table.nodes):
        if node not in spans:
            continue
        lo, hi = spans[node]
        out[lo : hi + 1, lo : hi + 1] = cls
    return out, table


def to_sparse(matrix: np.ndarray) -> list[list[int]]:
    """Upper triangle plus diagonal as ``[i, j, idx]`` triples."""
    m = matrix.shape[0]
    return [[i, j, int(matrix[i, j])] for i in range(m) for j in range(i, m)]


def from_sparse(entries, m: int) -> np.ndarray:
    out = np.full((m, m), IGNORE_INDEX, dtype=np.int64)
    for i, j, idx in entries:
        out[i, j] = out[j, i] = idx
    return out
