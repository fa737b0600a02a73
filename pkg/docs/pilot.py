"""Pilot run behind the desk-scale learning thresholds (see docs/pilot.md).

    python docs/pilot.py 12 1e-3 --out pilot/
"""
import argparse
import time
from pathlib import Path

import torch

from narfix.estimator import NARRepairer
from narfix.labeling import label_records
from narfix.toylang import CorpusConfig, generate


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("epochs", type=int)
    ap.add_argument("lr", type=float)
    ap.add_argument("--out", default="pilot")
    ap.add_argument("--max-seconds", type=float, default=1150)
    args = ap.parse_args()
    torch.set_num_threads(1)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    train = label_records([r.to_json() for r in generate(CorpusConfig(n=10000), seed=1)])
    test = [r.to_json() for r in generate(CorpusConfig(n=300), seed=2)]
    est = NARRepairer(epochs=args.epochs, lr=args.lr, seed=0, max_seconds=args.max_seconds)
    t = time.time()
    est.fit(train, log_path=out / "log.jsonl", ckpt_path=out / "nar.ckpt")
    print("train s", time.time() - t, flush=True)
    for row in est.history_:
        print(row)
    t = time.time()
    hit = 0
    for r in test:
        cands = est.predict_candidates([r["buggy"]], k=16)[0]
        hit += any(list(c.tokens) == r["fixed"] for c in cands)
    print("top16", hit / len(test), "eval s", time.time() - t)


if __name__ == "__main__":
    main()
