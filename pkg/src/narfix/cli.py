"""``narfix`` command line: corpus generation, labeling, training, repair, benchmarking, evaluation."""
from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import torch

from narfix.narmodel.config import ModelConfig
from narfix.pipeline.train import TrainConfig
from narfix.toylang.corpus import CorpusConfig

log = logging.getLogger("narfix")

ABLATIONS = {
    "action": "use_action_predictor",
    "dep": "use_dependency_extractor",
    "two-stage": "use_two_stage",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def default_config() -> dict:
    return {
        "seed": 0,
        "k": 16,
        "threads": 1,
        "lengths": [64, 128, 256],
        "trials": 5,
        "model": ModelConfig().to_dict(),
        "train": TrainConfig().to_dict(),
        "corpus": CorpusConfig().to_dict(),
    }


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_config(args) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = default_config()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            cfg = _merge(cfg, json.load(fh))
    flags = {}
    for name in ("seed", "k", "threads", "trials"):
        if getattr(args, name, None) is not None:
            flags[name] = getattr(args, name)
    if getattr(args, "lengths", None):
        flags["lengths"] = [int(x) for x in args.lengths.split(",")]
    if getattr(args, "n", None) is not None:
        flags.setdefault("corpus", {})["n"] = args.n
    if getattr(args, "precision", None):
        flags.setdefault("model", {})["precision"] = args.precision
    for ab in getattr(args, "ablate", None) or []:
        flags.setdefault("model", {})[ABLATIONS[ab]] = False
    cfg = _merge(cfg, flags)
    ModelConfig.from_dict(cfg["model"])  # validate early
    CorpusConfig.from_dict(cfg["corpus"])
    return cfg


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_meta(out, cfg) -> None:
    if out:
        Path(str(out) + ".config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def _load_records(path, p_max, threads):
    from narfix.labeling import REQUIRED_FIELDS, label_records
    from narfix.toylang.corpus import read_corpus

    records = read_corpus(path)
    if records and not all(k in records[0] for k in REQUIRED_FIELDS):
        records = label_records(records, p_max, threads)
    return records


def cmd_gen_corpus(args, cfg):
    from narfix.toylang.corpus import gen_corpus

    if not args.out:
        raise UsageError("gen-corpus needs --out")
    corpus, vocab = gen_corpus(CorpusConfig.from_dict(cfg["corpus"]), cfg["seed"], args.out)
    _write_meta(args.out, cfg)
    log.info("wrote %s and %s", corpus, vocab)


def cmd_label(args, cfg):
    import shutil

    from narfix.labeling import label_records, write_labeled
    from narfix.toylang.corpus import read_corpus, vocab_path_for

    if not args.input or not args.out:
        raise UsageError("label needs --input and --out")
    records = label_records(read_corpus(args.input), cfg["model"]["p_max"], cfg["threads"])
    write_labeled(records, args.out)
    src_vocab = vocab_path_for(args.input)
    if src_vocab.exists():
        shutil.copyfile(src_vocab, vocab_path_for(args.out))
    _write_meta(args.out, cfg)


def cmd_train(args, cfg):
    from narfix.pipeline.train import train

    if not args.input or not args.out:
        raise UsageError("train needs --input and --out")
    train(cfg, args.input, cfg["seed"], args.out, kind=args.kind)


def _read_source(path):
    from narfix.toylang.lexer import tokenize

    return tokenize(Path(path).read_text())


def cmd_repair(args, cfg):
    from narfix.pipeline.checkpoint import load_model
    from narfix.pipeline.repair import generate_candidates

    if not args.ckpt or not args.input:
        raise UsageError("repair needs --ckpt and --input")
    net, vocab, _, _ = load_model(args.ckpt, expect_kind="nar")
    buggy = _read_source(args.input)
    cands = generate_candidates(net, vocab, buggy, cfg["k"])
    body = {"config": cfg, "input": buggy, "candidates": [c.to_json() for c in cands]}
    _emit(json.dumps(body, indent=2) + "\n", args.out)


def cmd_bench(args, cfg):
    from narfix.pipeline.bench import bench_latency, report_json
    from narfix.pipeline.checkpoint import load_model

    if not args.ckpt or not args.ar_ckpt:
        raise UsageError("bench needs --ckpt and --ar-ckpt")
    nar, vocab, _, _ = load_model(args.ckpt, expect_kind="nar")
    ar, _, _, _ = load_model(args.ar_ckpt, expect_kind="ar")
    rows = bench_latency(nar, ar, cfg["lengths"], cfg["trials"], seed=cfg["seed"],
                         vocab_size=len(vocab), threads=cfg["threads"])
    _emit(json.dumps({"config": cfg, "report": report_json(rows)}, indent=2) + "\n", args.out)


def cmd_eval(args, cfg):
    from narfix.pipeline.checkpoint import load_model
    from narfix.pipeline.evaluate import eval_predictor, table_to_csv

    if not args.ckpt or not args.input:
        raise UsageError("eval needs --ckpt and --input")
    net, vocab, _, _ = load_model(args.ckpt, expect_kind="nar")
    records = _load_records(args.input, net.cfg.p_max, cfg["threads"])
    _emit(table_to_csv(eval_predictor(net, vocab, records)), args.out)
    _write_meta(args.out, cfg)


def cmd_analyze(args, cfg):
    from narfix.pipeline.checkpoint import load_model
    from narfix.pipeline.similarity import analyze_similarity, similarity_csv
    from narfix.toylang.corpus import read_corpus

    if not args.ckpt or not args.input:
        raise UsageError("analyze needs --ckpt and --input")
    net, vocab, _, _ = load_model(args.ckpt, expect_kind="nar")
    programs = [r["fixed"] for r in read_corpus(args.input)]
    _emit(similarity_csv(analyze_similarity(net, vocab, programs)), args.out)
    _write_meta(args.out, cfg)


COMMANDS = {
    "gen-corpus": (cmd_gen_corpus, "generate a synthetic bug corpus and its vocabulary"),
    "label": (cmd_label, "add repair actions, lengths and dependency matrices to a corpus"),
    "train": (cmd_train, "train a repair model (or the left-to-right baseline with --kind ar)"),
    "repair": (cmd_repair, "print ranked candidate patches for a buggy source file as JSON"),
    "bench": (cmd_bench, "compare NAR and AR decoding latency as JSON"),
    "eval": (cmd_eval, "action/length accuracy per input-length bucket as CSV"),
    "analyze": (cmd_analyze, "parent/token cosine similarity per AST distance as CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (overridden by flags)")
    common.add_argument("--seed", type=int, help="seed for every random choice (default 0)")
    common.add_argument("--out", help="output path (stdout when omitted, where applicable)")
    common.add_argument("--n", type=int, help="number of corpus records")
    common.add_argument("--ckpt", help="NAR model checkpoint")
    common.add_argument("--ar-ckpt", dest="ar_ckpt", help="AR baseline checkpoint")
    common.add_argument("--input", help="input corpus (JSONL) or source file")
    common.add_argument("--k", type=int, help="number of candidate patches (default 16)")
    common.add_argument("--lengths", help="comma-separated sequence lengths for bench")
    common.add_argument("--threads", type=int, help="worker threads for labeling and benchmarking")
    common.add_argument("--precision", choices=("f32", "f64"), help="parameter precision")
    common.add_argument("--ablate", action="append", choices=tuple(ABLATIONS),
                        help="disable a component; repeatable")
    parser = _Parser(prog="narfix", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name == "train":
            p.add_argument("--kind", choices=("nar", "ar"), default="nar", help="model family")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NARFIX_LOG", "error").upper(),
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    torch.set_num_threads(1)
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command][0](args, cfg)
    except UsageError as exc:
        print(f"narfix {args.command}: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 2
        log.debug("failure", exc_info=True)
        print(f"narfix {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
