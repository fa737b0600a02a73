"""Wall-clock comparison of two-pass NAR decoding against greedy AR decoding."""
from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np
import torch

from narfix.toylang.vocab import SPECIALS


class ConfigMismatch(ValueError):
    pass


@dataclass
class BenchRow:
    m: int
    nar_passes: int
    ar_passes: int
    nar_ms: float
    ar_ms: float
    ratio: float


def check_compatible(nar, ar) -> None:
    a = {**nar.cfg.architecture(), "precision": nar.cfg.precision}
    b = {**ar.cfg.architecture(), "precision": ar.cfg.precision}
    diff = [f"{k} ({a[k]} vs {b[k]})" for k in a if a[k] != b[k]]
    if diff:
        raise ConfigMismatch("checkpoints differ in " + ", ".join(diff))


def nar_decode(net, src_ids):
    """Predictor plus both decoder stages with every repair length pinned to 1."""
    E, pad, _, _ = net.encode_and_predict(src_ids)
    actions = [0] * len(src_ids) if net.cfg.use_action_predictor else None
    before = net.decoder_passes
    net.decode_variants(E, pad, src_ids, [(actions, [1] * len(src_ids))])
    return net.decoder_passes - before


def ar_decode(net, src_ids):
    _, passes = net.greedy(src_ids, len(src_ids), stop_at_eos=False)
    return passes


def _median_ms(fn, trials):
    fn()  # warmup
    times, passes = [], None
    for _ in range(trials):
        t = time.perf_counter()
        passes = fn()
        times.append((time.perf_counter() - t) * 1000.0)
    return statistics.median(times), passes


def bench_latency(nar, ar, lengths, trials: int = 5, seed: int = 0, vocab_size=None,
                  threads: int = 1) -> list[BenchRow]:
    """One row per target length ``m``; both models decode an ``m``-token source to ``m`` tokens."""
    if trials < 5:
        raise ValueError("at least five trials are required")
    check_compatible(nar, ar)
    vocab_size = vocab_size or min(nar.vocab_size, ar.vocab_size)
    for m in lengths:
        if m > nar.cfg.max_len or m > ar.cfg.max_len:
            raise ValueError(f"m={m} exceeds a model's max_len")
    prev_threads = torch.get_num_threads()
    torch.set_num_threads(threads)
    rng = np.random.default_rng(seed)
    nar.eval()
    ar.eval()
    rows = []
    try:
        with torch.no_grad():
            for m in lengths:
                src = rng.integers(len(SPECIALS), vocab_size, size=m).tolist()
                nar_ms, nar_passes = _median_ms(lambda: nar_decode(nar, src), trials)
                ar_ms, ar_passes = _median_ms(lambda: ar_decode(ar, src), trials)
                rows.append(BenchRow(m, nar_passes, ar_passes, round(nar_ms, 3), round(ar_ms, 3),
                                     round(ar_ms / nar_ms, 3)))
    finally:
        torch.set_num_threads(prev_threads)
    return rows


def report_json(rows) -> list[dict]:
    return [asdict(r) for r in rows]
