"""Differentiable-array substrate shared by all model code.

Arrays are ``torch.Tensor`` objects; autograd supplies analytic gradients and
:func:`grad_check` compares them with central finite differences.
"""
from __future__ import annotations

import base64
import json
import math
import struct
from collections import OrderedDict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from narfix.depmat import IGNORE_INDEX

PRECISIONS = {"f32": torch.float32, "f64": torch.float64}
CHECKPOINT_MAGIC = b"NARFIXCK"
CHECKPOINT_VERSION = 1


def dtype_of(precision: str) -> torch.dtype:
    try:
        return PRECISIONS[precision]
    except KeyError:
        raise ValueError(f"precision must be one of {sorted(PRECISIONS)}, got {precision!r}")


def softmax(x: torch.Tensor, axis: int = -1) -> torch.Tensor:
    shifted = x - x.max(dim=axis, keepdim=True).values.detach()
    e = shifted.exp()
    return e / e.sum(dim=axis, keepdim=True)


def log_softmax(x: torch.Tensor, axis: int = -1) -> torch.Tensor:
    shifted = x - x.max(dim=axis, keepdim=True).values.detach()
    return shifted - shifted.exp().sum(dim=axis, keepdim=True).log()


def cross_entropy(logits: torch.Tensor, targets: torch.Tensor, ignore_index: int = IGNORE_INDEX):
    """Mean NLL over positions whose target is not ``ignore_index``.

    ``logits`` is ``(..., C)``, ``targets`` the matching leading shape. With
    every position ignored the loss is an exact zero that still carries a
    (zero) gradient back to ``logits``.
    """
    flat = logits.reshape(-1, logits.shape[-1])
    tgt = targets.reshape(-1)
    keep = tgt != ignore_index
    if not bool(keep.any()):
        return flat.sum() * 0.0
    logp = log_softmax(flat[keep], axis=-1)
    picked = logp.gather(1, tgt[keep].unsqueeze(1)).squeeze(1)
    return -picked.mean()


def init_parameters(module: nn.Module, seed: int) -> None:
    """Glorot-uniform weight matrices, zero biases, unit norm gains; seeded."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, p in module.named_parameters():
            leaf = name.rsplit(".", 1)[-1]
            if "bias" in leaf:
                p.zero_()
            elif "norm" in name and p.dim() == 1:
                p.fill_(1.0)
            elif p.dim() >= 2:
                fan_out, fan_in = p.shape[0], int(np.prod(p.shape[1:]))
                bound = math.sqrt(6.0 / (fan_in + fan_out))
                p.copy_(torch.rand(p.shape, generator=gen, dtype=p.dtype) * 2 * bound - bound)
            else:
                p.zero_()


class ParamGroup(OrderedDict):
    """Named parameter arrays with the init scheme that produced them."""

    def __init__(self, items=(), scheme: str = "glorot_uniform", seed: int | None = None):
        super().__init__(items)
        self.scheme = scheme
        self.seed = seed

    @classmethod
    def from_module(cls, module: nn.Module, seed: int | None = None) -> ParamGroup:
        return cls(module.named_parameters(), seed=seed)


def _tensor_blocks(tensors):
    layout, blobs, offset = [], [], 0
    for name, t in tensors.items():
        arr = t.detach().cpu().numpy()
        if arr.dtype == np.float64:
            code = "<f8"
        elif arr.dtype == np.float32:
            code = "<f4"
        else:
            arr = arr.astype(np.int64)
            code = "<i8"
        raw = np.ascontiguousarray(arr.astype(code)).tobytes()
        layout.append({"name": name, "shape": list(arr.shape), "dtype": code,
                       "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    return layout, b"".join(blobs)


def save_checkpoint(path, header: dict, tensors) -> None:
    """Write ``MAGIC | u64 header length | JSON header | raw little-endian blocks``."""
    layout, body = _tensor_blocks(tensors)
    head = dict(header, version=CHECKPOINT_VERSION, tensors=layout)
    raw_head = json.dumps(head, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(raw_head)))
        fh.write(raw_head)
        fh.write(body)


def load_checkpoint(path) -> tuple[dict, OrderedDict]:
    data = Path(path).read_bytes()
    if data[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a narfix checkpoint")
    (hlen,) = struct.unpack("<Q", data[8:16])
    header = json.loads(data[16 : 16 + hlen])
    if header.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header.get('version')}")
    body = data[16 + hlen :]
    tensors = OrderedDict()
    for entry in header["tensors"]:
        chunk = body[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(chunk, dtype=entry["dtype"]).reshape(entry["shape"]).copy()
        tensors[entry["name"]] = torch.from_numpy(arr)
    return header, tensors


def check_shapes(expected: dict, loaded: dict) -> None:
    missing = sorted(set(expected) - set(loaded))
    extra = sorted(set(loaded) - set(expected))
    if missing or extra:
        raise ValueError(f"checkpoint/config mismatch: missing={missing} unexpected={extra}")
    for name, t in expected.items():
        if tuple(t.shape) != tuple(loaded[name].shape):
            raise ValueError(
                f"shape mismatch for {name}: config wants {tuple(t.shape)}, "
                f"checkpoint has {tuple(loaded[name].shape)}"
            )


def encode_rng_state(state: torch.Tensor) -> str:
    return base64.b64encode(state.numpy().tobytes()).decode()


def decode_rng_state(text: str) -> torch.Tensor:
    return torch.from_numpy(np.frombuffer(base64.b64decode(text), dtype=np.uint8).copy())


class ActivationPattern:
    """Records which side of zero every ``nn.ReLU`` input lies on during a forward pass.

    Two evaluations with equal signatures lie on the same smooth piece of a
    piecewise-linear network.
    """

    def __init__(self, module: nn.Module):
        self.module = module
        self.parts: list[bytes] = []

    def __enter__(self):
        self.handles = [m.register_forward_hook(self._hook)
                        for m in self.module.modules() if isinstance(m, nn.ReLU)]
        return self

    def _hook(self, mod, inputs, output):
        self.parts.append((inputs[0] > 0).numpy().tobytes())

    def __exit__(self, *exc):
        for h in self.handles:
            h.remove()

    def signature(self) -> bytes:
        return b"".join(self.parts)


def grad_check(f, params, eps: float = 1e-3, max_entries: int | None = None, seed: int = 0,
               floor: float = 1e-6, state=None, stats=None) -> float:
    """Max relative error between autograd and a central finite-difference stencil.

    ``f`` is a zero-argument callable returning a scalar tensor computed from
    ``params`` (a mapping of tensors with ``requires_grad``). The numerical
    derivative uses the fourth-order five-point central stencil, whose
    truncation error is small enough at ``eps=1e-3`` that float64 rounding
    stays negligible. With ``max_entries`` set, that many seeded entries per
    tensor are probed. One entry's error is ``|a - n| / max(|a|, |n|, floor)``.

    ``state`` is an optional zero-argument callable returning a hashable
    description of the discrete branch the function is on (ReLU signs,
    threshold decisions). Probes whose stencil crosses a branch boundary
    have no meaningful finite difference and are skipped; ``stats`` (a dict)
    receives the probed and skipped counts.
    """
    params = OrderedDict(params)
    for p in params.values():
        p.grad = None
    loss = f()
    if not torch.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss.item()} in grad_check")
    loss.backward()
    analytic = {k: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
                for k, p in params.items()}
    rng = np.random.default_rng(seed)
    worst = 0.0
    probed = skipped = 0
    base_state = state() if state is not None else None
    with torch.no_grad():
        for name, p in params.items():
            flat = p.data.view(-1)
            idx = np.arange(flat.numel())
            if max_entries is not None and flat.numel() > max_entries:
                idx = rng.choice(flat.numel(), size=max_entries, replace=False)
            g = analytic[name].view(-1)
            for i in idx:
                orig = flat[i].item()
                vals, states = [], {base_state}
                for step in (2, 1, -1, -2):
                    flat[i] = orig + step * eps
                    vals.append(f().item())
                    if state is not None:
                        states.add(state())
                flat[i] = orig
                if len(states) > 1:
                    skipped += 1
                    continue
                probed += 1
                if not all(math.isfinite(v) for v in vals):
                    raise FloatingPointError(f"non-finite loss while probing {name}[{i}]")
                num = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * eps)
                a = g[i].item()
                err = abs(a - num) / max(abs(a), abs(num), floor)
                worst = max(worst, err)
    if stats is not None:
        stats.update(probed=probed, skipped=skipped)
    return worst


def warmup_linear(step: int, warmup: int, total: int) -> float:
    """LR multiplier: linear ramp 0 -> 1 over ``warmup`` steps, then linear decay to 0."""
    if warmup > 0 and step < warmup:
        return (step + 1) / warmup
    if total <= warmup:
        return 1.0
    return max(0.0, (total - step) / (total - warmup))


def make_optimizer(parameters, peak_lr: float, warmup: int, total: int):
    opt = torch.optim.Adam(parameters, lr=peak_lr, betas=(0.9, 0.999), eps=1e-8)
    sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda s: warmup_linear(s, warmup, total))
    return opt, sched


def optimizer_tensors(opt: torch.optim.Optimizer, names) -> dict:
    """Flatten Adam moments into named tensors for checkpointing."""
    out = {}
    for name, p in zip(names, opt.param_groups[0]["params"]):
        st = opt.state.get(p)
        if not st:
            continue
        out[f"__opt__.{name}.exp_avg"] = st["exp_avg"]
        out[f"__opt__.{name}.exp_avg_sq"] = st["exp_avg_sq"]
        out[f"__opt__.{name}.step"] = torch.tensor([float(st["step"])], dtype=torch.float64)
    return out


def restore_optimizer(opt: torch.optim.Optimizer, names, tensors) -> None:
    for name, p in zip(names, opt.param_groups[0]["params"]):
        key = f"__opt__.{name}.exp_avg"
        if key not in tensors:
            continue
        opt.state[p] = {
            "step": torch.tensor(float(tensors[f"__opt__.{name}.step"][0])),
            "exp_avg": tensors[key].to(p.dtype).clone(),
            "exp_avg_sq": tensors[f"__opt__.{name}.exp_avg_sq"].to(p.dtype).clone(),
        }
