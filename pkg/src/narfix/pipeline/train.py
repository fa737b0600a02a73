"""Joint training of the NAR model (and the AR baseline) with Adam and warmup/decay."""
from __future__ import annotations

import json
import logging
import math
import time
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import torch

from narfix.narmodel.ar import ARRepairNet
from narfix.narmodel.data import collate
from narfix.nncore import make_optimizer, optimizer_tensors, restore_optimizer
from narfix.depmat import DEFAULT_P_MAX
from narfix.labeling import REQUIRED_FIELDS, label_records
from narfix.narmodel.config import ModelConfig
from narfix.narmodel.model import NARRepairNet
from narfix.pipeline.checkpoint import load_model, save_model
from narfix.toylang.corpus import read_corpus, vocab_path_for
from narfix.toylang.vocab import Vocabulary

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 50
    lr: float = 1e-3
    warmup: int = 200
    checkpoint_every: int = 0  # epochs; 0 writes only the final checkpoint
    max_seconds: float | None = None  # no epoch starts that is projected to overrun this

    @classmethod
    def from_dict(cls, d) -> TrainConfig:
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def to_dict(self) -> dict:
        return asdict(self)


def make_batches(records, batch_size: int, seed: int, epoch: int) -> list[list[int]]:
    """Length-bucketed batches in a seeded random order."""
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(records))
    order = sorted(order, key=lambda i: len(records[i]["fixed"]))
    batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def _public(row: dict) -> dict:
    # wall-clock stays out of artifacts so identical runs give identical files
    return {k: v for k, v in row.items() if k != "seconds"}


def _ar_loss(net: ARRepairNet, batch):
    return net.loss(batch.src, batch.src_pad, batch.tgt, batch.tgt_pad)


def train_model(net, records, vocab, tcfg: TrainConfig, seed: int, log_path=None,
                ckpt_path=None, resume_from=None, on_batch=None, stop_after_epochs=None,
                run_config=None):
    """Train ``net`` in place; returns the list of per-epoch log rows.

    Dropout randomness is re-seeded from ``(seed, global step)`` before every
    step, so a resumed run replays the uninterrupted trajectory exactly.
    """
    is_ar = isinstance(net, ARRepairNet)
    cfg = net.cfg
    for rec in records:
        if max(len(rec["buggy"]), len(rec["fixed"])) + int(is_ar) > cfg.max_len:
            raise ValueError(f"record exceeds max_len={cfg.max_len}: {' '.join(rec['buggy'][:10])} ...")
    steps_per_epoch = math.ceil(len(records) / tcfg.batch_size)
    total = max(1, tcfg.epochs * steps_per_epoch)
    params = list(net.parameters())
    names = [n for n, _ in net.named_parameters()]
    opt, sched = make_optimizer(params, tcfg.lr, min(tcfg.warmup, total // 2), total)
    start_epoch = 0
    rows = []
    if resume_from is not None:
        loaded, _, header, extra = load_model(resume_from)
        net.load_state_dict(loaded.state_dict())
        restore_optimizer(opt, names, extra)
        start_epoch = header["train_state"]["epoch"]
        with warnings.catch_warnings():
            # replaying the schedule before any optimizer step is intended here
            warnings.simplefilter("ignore", UserWarning)
            for _ in range(header["train_state"]["step"]):
                sched.step()
        rows = header["train_state"].get("log", [])
    step = start_epoch * steps_per_epoch
    t0 = time.perf_counter()
    log_fh = open(log_path, "a" if resume_from else "w") if log_path else None

    def checkpoint(epoch):
        if ckpt_path is None:
            return
        state = {"epoch": epoch, "step": step, "seed": seed, "log": [_public(r) for r in rows]}
        save_model(ckpt_path, net, vocab,
                   extra_header={"train": tcfg.to_dict(), "train_state": state,
                                 "run_config": run_config},
                   extra_tensors=optimizer_tensors(opt, names))

    last_epoch = start_epoch
    try:
        for epoch in range(start_epoch, tcfg.epochs):
            net.train()
            sums = {}
            batches = make_batches(records, tcfg.batch_size, seed, epoch)
            for idx in batches:
                batch = collate([records[i] for i in idx], vocab, cfg.l_max)
                torch.manual_seed(seed * 1_000_003 + step)
                if is_ar:
                    loss = _ar_loss(net, batch)
                    parts = {"L_total": loss.item()}
                else:
                    losses = net.loss(batch)
                    loss = losses.total
                    parts = losses.as_floats()
                    if on_batch is not None:
                        on_batch(losses, batch)
                if not math.isfinite(parts["L_total"]):
                    raise FloatingPointError(f"non-finite loss at epoch {epoch}, step {step}")
                opt.zero_grad()
                loss.backward()
                opt.step()
                sched.step()
                step += 1
                for k, v in parts.items():
                    sums[k] = sums.get(k, 0.0) + v
            last_epoch = epoch + 1
            row = {"epoch": last_epoch}
            row.update({k: v / len(batches) for k, v in sums.items()})
            row["lr"] = sched.get_last_lr()[0]
            row["seconds"] = round(time.perf_counter() - t0, 3)
            rows.append(row)
            if log_fh:
                log_fh.write(json.dumps(_public(row)) + "\n")
                log_fh.flush()
            log.info("epoch %d %s", last_epoch, row)
            if stop_after_epochs is not None and last_epoch >= stop_after_epochs:
                break
            if tcfg.checkpoint_every and last_epoch % tcfg.checkpoint_every == 0:
                checkpoint(last_epoch)
            per_epoch = row["seconds"] / (last_epoch - start_epoch)
            if tcfg.max_seconds is not None and row["seconds"] + per_epoch > tcfg.max_seconds:
                # stop before an epoch that would overrun the budget
                log.warning("time budget of %.0fs reached after epoch %d", tcfg.max_seconds, last_epoch)
                break
        checkpoint(last_epoch)
    finally:
        if log_fh:
            log_fh.close()
    net.eval()
    return rows


def train(config: dict, corpus_path, seed: int, out, kind: str = "nar", vocab=None) -> Path:
    """Train from a corpus file (labeled on the fly if needed); writes ``out`` and ``<out>.log.jsonl``."""
    records = read_corpus(corpus_path)
    if records and not all(k in records[0] for k in REQUIRED_FIELDS):
        records = label_records(records, config.get("model", {}).get("p_max", DEFAULT_P_MAX),
                                config.get("threads", 1))
    if vocab is None:
        vpath = vocab_path_for(corpus_path)
        vocab = Vocabulary.load(vpath) if vpath.exists() else \
            Vocabulary.build(s for r in records for s in (r["buggy"], r["fixed"]))
    mcfg = ModelConfig.from_dict(config.get("model", {}))
    tcfg = TrainConfig.from_dict(config.get("train", {}))
    net = (ARRepairNet if kind == "ar" else NARRepairNet)(mcfg, len(vocab), seed=seed)
    out = Path(out)
    train_model(net, records, vocab, tcfg, seed, log_path=log_path_for(out), ckpt_path=out,
                run_config=config)
    return out


def log_path_for(ckpt) -> Path:
    ckpt = Path(ckpt)
    return ckpt.with_name(ckpt.name + ".log.jsonl")
