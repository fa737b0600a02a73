"""Program templates for the synthetic corpus.

Each template builds one function whose body is redundant enough (function
name, parameter usage, repeated literals) that a single injected bug can be
undone from context alone.
"""
from __future__ import annotations

VAR_POOL = (
    "a", "b", "c", "x", "y", "z", "n", "m", "i", "j", "k", "p", "q",
    "lo", "hi", "val", "num", "cnt", "acc", "tmp", "res", "left", "right",
    "base", "step", "size",
)
LITERAL_POOL = ("0", "1", "2", "3", "5", "10", "100")

BINOP_NAMES = {
    "+": ("add", "plus", "sum"),
    "-": ("sub", "minus", "diff"),
    "*": ("mul", "times", "prod"),
    "/": ("div", "quot"),
}
PREDICATES = {
    "isZero": "==", "nonZero": "!=", "isPositive": ">", "isNegative": "<",
    "atLeastZero": ">=", "atMostZero": "<=",
}


def _vars(rng, k):
    return rng.sample(VAR_POOL, k)


def binop(rng):
    op = rng.choice(sorted(BINOP_NAMES))
    name = rng.choice(BINOP_NAMES[op])
    p, q = _vars(rng, 2)
    return name, f"int {name} ( int {p} , int {q} ) {{ return {p} {op} {q} ; }}"


def safe_div(rng):
    p, q = _vars(rng, 2)
    name = rng.choice(("safeDiv", "divOrZero"))
    return name, f"int {name} ( int {p} , int {q} ) {{ if ( {q} == 0 ) return 0 ; return {p} / {q} ; }}"


def max_min(rng):
    p, q = _vars(rng, 2)
    name, op = rng.choice((("max", ">"), ("min", "<")))
    return name, f"int {name} ( int {p} , int {q} ) {{ if ( {p} {op} {q} ) return {p} ; return {q} ; }}"


def clamp(rng):
    (p,) = _vars(rng, 1)
    lit = rng.choice(LITERAL_POOL[1:])
    name, op = rng.choice((("atMost", ">"), ("atLeast", "<")))
    return name, f"int {name} ( int {p} ) {{ if ( {p} {op} {lit} ) return {lit} ; return {p} ; }}"


def absolute(rng):
    (p,) = _vars(rng, 1)
    return "abs", f"int abs ( int {p} ) {{ if ( {p} < 0 ) return 0 - {p} ; return {p} ; }}"


def predicate(rng):
    name = rng.choice(sorted(PREDICATES))
    (p,) = _vars(rng, 1)
    return name, f"bool {name} ( int {p} ) {{ return {p} {PREDICATES[name]} 0 ; }}"


def local_temp(rng):
    p, q, t = _vars(rng, 3)
    name, body = rng.choice((
        ("sumSq", f"int {t} = {p} + {q} ; return {t} * {t} ;"),
        ("avg", f"int {t} = {p} + {q} ; return {t} / 2 ;"),
        ("diffSq", f"int {t} = {p} - {q} ; return {t} * {t} ;"),
    ))
    return name, f"int {name} ( int {p} , int {q} ) {{ {body} }}"


def logical(rng):
    p, q = _vars(rng, 2)
    name, op = rng.choice((("both", "&&"), ("either", "||")))
    return name, f"bool {name} ( bool {p} , bool {q} ) {{ return {p} {op} {q} ; }}"


def in_range(rng):
    p, lo, hi = _vars(rng, 3)
    return "inRange", (
        f"bool inRange ( int {p} , int {lo} , int {hi} ) "
        f"{{ return {p} >= {lo} && {p} <= {hi} ; }}"
    )


def delegate(rng):
    (p,) = _vars(rng, 1)
    name, callee = rng.choice((("twice", "add"), ("square", "mul"), ("zero", "sub")))
    return name, f"int {name} ( int {p} ) {{ return {callee} ( {p} , {p} ) ; }}"


def step(rng):
    (p,) = _vars(rng, 1)
    name, op = rng.choice((("inc", "+"), ("dec", "-")))
    return name, f"int {name} ( int {p} ) {{ {p} = {p} {op} 1 ; return {p} ; }}"


def sign(rng):
    (p,) = _vars(rng, 1)
    return "sign", (
        f"int sign ( int {p} ) {{ if ( {p} > 0 ) return 1 ; "
        f"if ( {p} < 0 ) return 0 - 1 ; return 0 ; }}"
    )


def pick(rng):
    c, p, q = _vars(rng, 3)
    return "pick", (
        f"int pick ( bool {c} , int {p} , int {q} ) "
        f"{{ if ( {c} ) return {p} ; else return {q} ; }}"
    )


def report(rng):
    (p,) = _vars(rng, 1)
    return "report", f"void report ( int {p} ) {{ print ( {p} ) ; }}"


TEMPLATES = (
    binop, safe_div, max_min, clamp, absolute, predicate, local_temp,
    logical, in_range, delegate, step, sign, pick, report,
)


def sample_program(rng, max_functions: int = 2) -> str:
    """Concatenate 1..max_functions functions with distinct names."""
    count = rng.randint(1, max_functions)
    names, parts = set(), []
    while len(parts) < count:
        name, src = rng.choice(TEMPLATES)(rng)
        if name in names:
            continue
        names.add(name)
        parts.append(src)
    return " ".join(parts)
