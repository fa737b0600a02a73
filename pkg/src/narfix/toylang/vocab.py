from __future__ import annotations

import hashlib
import json
from pathlib import Path

PAD, MASK, UNK, EOS = "[PAD]", "[MASK]", "[UNK]", "[EOS]"
SPECIALS = (PAD, MASK, UNK, EOS)
PAD_ID, MASK_ID, UNK_ID, EOS_ID = range(4)


class Vocabulary:
    """Bijection between lexemes and ids; the reserved specials come first."""

    def __init__(self, tokens=()):
        self.itos: list[str] = list(SPECIALS)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        for tok in tokens:
            self.add(tok)

    @classmethod
    def build(cls, sequences) -> Vocabulary:
        seen = set()
        for seq in sequences:
            seen.update(seq)
        return cls(sorted(seen - set(SPECIALS)))

    def add(self, tok: str) -> int:
        if tok not in self.stoi:
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)
        return self.stoi[tok]

    def __len__(self):
        return len(self.itos)

    def __contains__(self, tok):
        return tok in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def encode(self, tokens) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids) -> list[str]:
        return [self.itos[i] for i in ids]

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.itos).encode()).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps(self.itos)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> Vocabulary:
        return cls.from_list(json.loads(Path(path).read_text()))

    @classmethod
    def from_list(cls, itos) -> Vocabulary:
        if tuple(itos[: len(SPECIALS)]) != SPECIALS:
            raise ValueError(f"vocabulary must start with {SPECIALS}")
        return cls(itos[len(SPECIALS):])
