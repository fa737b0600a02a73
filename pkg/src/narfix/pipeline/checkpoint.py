"""Model checkpoints: config + vocabulary header, parameters and optimizer state."""
from __future__ import annotations

from narfix.narmodel.ar import ARRepairNet
from narfix.narmodel.config import ModelConfig
from narfix.narmodel.model import NARRepairNet
from narfix.nncore import check_shapes, load_checkpoint, save_checkpoint
from narfix.toylang.vocab import Vocabulary

KINDS = {"nar": NARRepairNet, "ar": ARRepairNet}


def kind_of(net) -> str:
    return "ar" if isinstance(net, ARRepairNet) else "nar"


def save_model(path, net, vocab: Vocabulary, extra_header=None, extra_tensors=None) -> None:
    header = {
        "kind": kind_of(net),
        "config": net.cfg.to_dict(),
        "precision": net.cfg.precision,
        "vocab": vocab.itos,
        "vocab_hash": vocab.digest(),
    }
    header.update(extra_header or {})
    tensors = dict(net.state_dict())
    tensors.update(extra_tensors or {})
    save_checkpoint(path, header, tensors)


def load_model(path, expect_kind: str | None = None):
    """Returns ``(net, vocab, header, extra_tensors)``."""
    header, tensors = load_checkpoint(path)
    kind = header.get("kind", "nar")
    if expect_kind is not None and kind != expect_kind:
        raise ValueError(f"{path} holds a {kind!r} model, expected {expect_kind!r}")
    vocab = Vocabulary.from_list(header["vocab"])
    if vocab.digest() != header["vocab_hash"]:
        raise ValueError(f"{path}: vocabulary hash mismatch")
    cfg = ModelConfig.from_dict(header["config"])
    net = KINDS[kind](cfg, len(vocab))
    expected = net.state_dict()
    params = {k: v for k, v in tensors.items() if not k.startswith("__")}
    check_shapes(expected, params)
    net.load_state_dict({k: v.to(expected[k].dtype) for k, v in params.items()})
    extra = {k: v for k, v in tensors.items() if k.startswith("__")}
    return net, vocab, header, extra
