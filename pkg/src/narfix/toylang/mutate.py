"""Deterministic single-site bug injection."""
from __future__ import annotations

import random
from dataclasses import dataclass

from narfix.toylang.lexer import classify
from narfix.toylang.parser import parse
from narfix.toylang.templates import LITERAL_POOL, VAR_POOL

MUTATION_KINDS = (
    "operator-swap",
    "identifier-swap",
    "token-delete",
    "token-insert",
    "condition-negate",
    "literal-change",
)

SWAP_TABLE = {
    "+": "-", "-": "+", "*": "/", "/": "*",
    "&&": "||", "||": "&&",
    "<": "<=", "<=": "<", ">": ">=", ">=": ">",
    "==": "!=", "!=": "==",
}
NEGATION_TABLE = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
INSERTABLE = ("(", ")", "{", "}", ",", ";", "+", "-", "*", "=", "==", "!", "return", "0", "1")


class InapplicableMutation(ValueError):
    """The program has no site for the requested mutation kind."""


@dataclass(frozen=True)
class CorpusRecord:
    buggy: tuple[str, ...]
    fixed: tuple[str, ...]
    mutation_kind: str
    seed: int

    def to_json(self) -> dict:
        return {
            "buggy": list(self.buggy),
            "fixed": list(self.fixed),
            "mutation": self.mutation_kind,
            "seed": self.seed,
        }


def _rng(kind: str, seed: int) -> random.Random:
    return random.Random(seed * len(MUTATION_KINDS) + MUTATION_KINDS.index(kind))


def _condition_sites(tokens) -> list[int]:
    ast = parse(tokens)
    sites = []
    for node in ast.nodes:
        if node.label != "if_stmt":
            continue
        cond = node.children[2]
        stack = [cond]
        while stack:
            n = ast.nodes[stack.pop()]
            if n.is_leaf:
                if tokens[n.token_index] in NEGATION_TABLE:
                    sites.append(n.token_index)
            else:
                stack.extend(n.children)
    return sorted(sites)


def _declared_names(tokens) -> set[int]:
    """Positions of identifiers that name a function or declare a parameter/local."""
    ast = parse(tokens)
    out = set()
    for node in ast.nodes:
        if node.label in ("func_def", "param", "decl_stmt"):
            out.add(ast.nodes[node.children[1]].token_index)
    return out


def mutate(fixed, kind: str, seed: int, swap_table=None) -> CorpusRecord:
    """Inject one bug of ``kind`` into ``fixed``; a pure function of its arguments."""
    if kind not in MUTATION_KINDS:
        raise ValueError(f"unknown mutation kind {kind!r}")
    fixed = tuple(fixed)
    swap_table = SWAP_TABLE if swap_table is None else swap_table
    rng = _rng(kind, seed)
    buggy = list(fixed)

    if kind == "operator-swap":
        sites = [i for i, t in enumerate(fixed) if t in swap_table]
        if not sites:
            raise InapplicableMutation(kind)
        i = rng.choice(sites)
        buggy[i] = swap_table[fixed[i]]
    elif kind == "condition-negate":
        sites = _condition_sites(fixed)
        if not sites:
            raise InapplicableMutation(kind)
        i = rng.choice(sites)
        buggy[i] = NEGATION_TABLE[fixed[i]]
    elif kind == "identifier-swap":
        decl = _declared_names(fixed)
        uses = [
            i for i, t in enumerate(fixed)
            if classify(t) == "identifier" and i not in decl
            and not (i + 1 < len(fixed) and fixed[i + 1] == "(")
        ]
        if not uses:
            raise InapplicableMutation(kind)
        i = rng.choice(uses)
        local = sorted({fixed[j] for j in uses} - {fixed[i]})
        pool = local if local and rng.random() < 0.5 else sorted(set(VAR_POOL) - {fixed[i]})
        buggy[i] = rng.choice(pool)
    elif kind == "literal-change":
        sites = [i for i, t in enumerate(fixed) if t.isdigit() or t in ("true", "false")]
        if not sites:
            raise InapplicableMutation(kind)
        i = rng.choice(sites)
        if fixed[i] in ("true", "false"):
            buggy[i] = "false" if fixed[i] == "true" else "true"
        else:
            buggy[i] = rng.choice([lit for lit in LITERAL_POOL if lit != fixed[i]])
    elif kind == "token-delete":
        if len(fixed) < 2:
            raise InapplicableMutation(kind)
        del buggy[rng.randrange(len(fixed))]
    elif kind == "token-insert":
        buggy.insert(rng.randrange(len(fixed) + 1), rng.choice(INSERTABLE))

    if tuple(buggy) == fixed:
        raise AssertionError(f"{kind} produced an unchanged program")
    return CorpusRecord(tuple(buggy), fixed, kind, seed)
