"""Independent reference implementations used only by the tests."""
import itertools

import numpy as np


def levenshtein(a, b) -> int:
    """Textbook prefix-table DP (the library uses a suffix table)."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def all_sequences(alphabet, max_len):
    return [s for n in range(max_len + 1) for s in itertools.product(alphabet, repeat=n)]


def levenshtein_block(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distances for every row of ``A`` against every row of ``B`` (same-length blocks)."""
    na, la = A.shape
    nb, lb = B.shape
    prev = np.broadcast_to(np.arange(lb + 1), (na, nb, lb + 1)).copy()
    for i in range(1, la + 1):
        cur = np.empty_like(prev)
        cur[..., 0] = i
        for j in range(1, lb + 1):
            diff = (A[:, i - 1][:, None] != B[:, j - 1][None, :]).astype(np.int64)
            cur[..., j] = np.minimum(np.minimum(prev[..., j] + 1, cur[..., j - 1] + 1),
                                     prev[..., j - 1] + diff)
        prev = cur
    return prev[..., lb]


def nca_by_paths(ast, i, j) -> int:
    """Deepest node shared by the two leaves' root paths."""
    pi = ast.path_to_root(ast.leaves[i])[1:]
    pj = set(ast.path_to_root(ast.leaves[j])[1:])
    return next(n for n in pi if n in pj)
