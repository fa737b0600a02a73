from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path

from narfix.toylang.lexer import tokenize
from narfix.toylang.mutate import MUTATION_KINDS, CorpusRecord, InapplicableMutation, mutate
from narfix.toylang.parser import parse
from narfix.toylang.templates import sample_program
from narfix.toylang.vocab import Vocabulary


@dataclass
class CorpusConfig:
    n: int = 1000
    mutations_per_program: int = 1
    max_functions: int = 3
    kinds: tuple[str, ...] = MUTATION_KINDS
    max_internal_nodes: int = 64
    max_tokens: int = 120
    max_vocab: int = 512

    def __post_init__(self):
        self.kinds = tuple(self.kinds)
        if self.n < 0:
            raise ValueError("n must be non-negative")
        if self.mutations_per_program < 1:
            raise ValueError("mutations_per_program must be >= 1")
        unknown = set(self.kinds) - set(MUTATION_KINDS)
        if unknown or not self.kinds:
            raise ValueError(f"invalid mutation kinds: {sorted(unknown) or 'none given'}")

    @classmethod
    def from_dict(cls, d) -> CorpusConfig:
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kinds"] = list(self.kinds)
        return d


def _program(rng, config) -> tuple[str, ...]:
    while True:
        tokens = tuple(tokenize(sample_program(rng, config.max_functions)))
        if len(tokens) > config.max_tokens:
            continue
        ast = parse(tokens)
        if len(ast.internal_nodes()) <= config.max_internal_nodes:
            return tokens


def generate(config: CorpusConfig, seed: int) -> list[CorpusRecord]:
    rng = random.Random(seed)
    records: list[CorpusRecord] = []
    while len(records) < config.n:
        fixed = _program(rng, config)
        for _ in range(config.mutations_per_program):
            if len(records) >= config.n:
                break
            mseed = rng.randrange(2**31)
            start = rng.randrange(len(config.kinds))
            for step in range(len(config.kinds)):
                kind = config.kinds[(start + step) % len(config.kinds)]
                try:
                    records.append(mutate(fixed, kind, mseed))
                    break
                except InapplicableMutation:
                    continue
    return records


def vocab_path_for(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".vocab.json")


def write_corpus(records, path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def read_corpus(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def gen_corpus(config: CorpusConfig, seed: int, out) -> tuple[Path, Path]:
    """Write ``out`` (JSON lines) and its vocabulary file; returns both paths."""
    records = generate(config, seed)
    vocab = Vocabulary.build(s for r in records for s in (r.buggy, r.fixed))
    if len(vocab) > config.max_vocab:
        raise ValueError(f"vocabulary size {len(vocab)} exceeds max_vocab={config.max_vocab}")
    out = Path(out)
    write_corpus(records, out)
    vpath = vocab_path_for(out)
    vocab.save(vpath)
    return out, vpath
