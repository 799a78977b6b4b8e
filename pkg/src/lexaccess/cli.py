"""Command-line entry point: ``lexaccess train|decode|eval|classes|synth``.

Exit status is 0 on success, 1 when any input line has no hypothesis, and
2 on usage, I/O or validation errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import models as models_mod
from .codec import Scorer, bits_per_phoneme, format_breakdown
from .config import Config, load_config
from .errors import (
    InvalidArgs,
    LexAccessError,
    LineCountMismatch,
    NoHypothesis,
    UnknownPhoneme,
)
from .evaluate import (
    EvalRecord,
    bucket_report,
    distortion_rate,
    format_bucket_table,
    scatter_csv,
    word_error_rate,
)
from .lexicon import load_lexicon, load_realizations
from .lm import load_tagged_corpus
from .phonemes import BroadGroupMap, PhonemeInventory, default_broad_groups, default_inventory
from .search import decode
from .shortlist import build_classes
from .synth import load_pairs, make_synthetic, write_synthetic

log = logging.getLogger("lexaccess")

EXIT_OK, EXIT_NO_HYP, EXIT_USAGE = 0, 1, 2


def _config(args, required=()) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    overrides = {
        "model_dir": Path(args.model_dir) if getattr(args, "model_dir", None) else None,
        "beam_bits": getattr(args, "beam_bits", None),
        "max_beam": getattr(args, "max_beam", None),
        "top_k": getattr(args, "top_k", None),
        "lm": getattr(args, "lm", None),
        "seed": getattr(args, "seed", None),
    }
    if getattr(args, "no_shortlist", False):
        overrides["shortlist"] = False
    return cfg.update(overrides).validate(required)


def _inventory(cfg: Config):
    inv = PhonemeInventory.from_file(cfg.inventory) if cfg.inventory else default_inventory()
    groups = BroadGroupMap.from_file(cfg.groups) if cfg.groups else default_broad_groups()
    return inv, groups


def _read_lines(path):
    """Physical lines of a text file, without line terminators."""
    p = Path(path)
    if not p.exists():
        raise LexAccessError(f"no such file: {p}")
    return p.read_text(encoding="utf-8").splitlines()


# -- train -----------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = _config(args, required=("lexicon", "tagged_corpus"))
    if cfg.model_dir is None:
        raise InvalidArgs("config key 'model_dir' is required")
    inv, groups = _inventory(cfg)
    lex = load_lexicon(cfg.lexicon, inv)
    corpus = load_tagged_corpus(cfg.tagged_corpus)
    reals = load_realizations(cfg.realizations) if cfg.realizations else []
    pairs = load_pairs(cfg.pairs) if cfg.pairs else None
    m = models_mod.train(inv, groups, lex, corpus, reals, pairs, seed=cfg.seed,
                         k_range=(cfg.k_min, cfg.k_max), build_shortlist=cfg.shortlist,
                         folds=cfg.folds)
    m.save(cfg.model_dir)
    k = m.classes.k if m.classes is not None else 0
    print(f"vocabulary {len(m.lexicon)} words, {m.lexicon.realization_count} realizations, "
          f"{k} classes; models written to {cfg.model_dir}")
    return EXIT_OK


# -- decode ----------------------------------------------------------------

def _parse_input_line(line, lineno, inv):
    """Phonemes of one input line; ``|`` marks boundaries and is returned separately."""
    seq, bounds, start = [], [], 0
    for tok in line.split():
        if tok == "|":
            bounds.append((start, len(seq)))
            start = len(seq)
            continue
        if tok not in inv:
            raise UnknownPhoneme(tok, len(seq))
        seq.append(tok)
    if bounds and start < len(seq):
        bounds.append((start, len(seq)))
    return tuple(seq), (bounds or None)


def _parse_inputs(path, inv):
    out = []
    for lineno, line in enumerate(_read_lines(path), 1):
        try:
            out.append(_parse_input_line(line, lineno, inv))
        except UnknownPhoneme as exc:
            raise LexAccessError(f"{path}:{lineno}: {exc}") from None
    return out


def cmd_decode(args) -> int:
    cfg = _config(args, required=("model_dir",))
    m = models_mod.Models.load(cfg.model_dir)
    inputs = _parse_inputs(args.input, m.inventory)
    search = cfg.search()
    scorer = Scorer(m, search.lm)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    status = EXIT_OK
    try:
        for lineno, (seq, _) in enumerate(inputs, 1):
            if not seq:
                print(f"{args.input}:{lineno}: empty input line", file=sys.stderr)
                out.write("\tnan\tnan\n")
                status = EXIT_NO_HYP
                continue
            try:
                hyps = decode(seq, m, search, scorer)
            except NoHypothesis as exc:
                print(f"{args.input}:{lineno}: no hypothesis: {exc}", file=sys.stderr)
                out.write("\tnan\tnan\n")
                status = EXIT_NO_HYP
                continue
            best = hyps[0]
            out.write(f"{best.text()}\t{best.total_bits:.4f}\t"
                      f"{bits_per_phoneme(best, len(seq)):.4f}\n")
            for rank, h in enumerate(hyps[1:], 2):
                out.write(f"# {rank}\t{h.text()}\t{h.total_bits:.4f}\t"
                          f"{bits_per_phoneme(h, len(seq)):.4f}\n")
            if args.breakdown:
                for rank, h in enumerate(hyps, 1):
                    table = format_breakdown(h, f"line {lineno}, rank {rank}")
                    out.writelines(f"# {ln}\n" for ln in table.splitlines())
    finally:
        if out is not sys.stdout:
            out.close()
    return status


# -- eval ------------------------------------------------------------------

def _parse_hyps(path):
    """Hypothesis records: ``words [TAB bits [TAB bits/phoneme]]``; ``#`` lines skipped."""
    out = []
    for line in _read_lines(path):
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        bits = float(parts[1]) if len(parts) > 1 and parts[1] else math.nan
        out.append((parts[0].split(), bits))
    return out


def _ref_words(line):
    return [tok.rsplit("/", 1)[0] if "/" in tok else tok for tok in line.split()]


def evaluate_files(hyp_path, ref_path, input_path, m) -> list:
    hyps = _parse_hyps(hyp_path)
    refs = [_ref_words(ln) for ln in _read_lines(ref_path)]
    inputs = _parse_inputs(input_path, m.inventory)
    counts = {"hyp": len(hyps), "ref": len(refs), "input": len(inputs)}
    if len(set(counts.values())) != 1:
        raise LineCountMismatch(counts)
    records = []
    for k, ((words, bits), ref, (seq, bounds)) in enumerate(zip(hyps, refs, inputs), 1):
        ins, dels, subs, wer = word_error_rate(words, ref)
        dist = distortion_rate(seq, ref, bounds, m.lexicon, m.costs)
        bpp = bits / len(seq) if seq else math.nan
        records.append(EvalRecord(str(k), ref, words, ins, dels, subs, wer, dist, bpp))
    return records


def aggregate_wer(records) -> float:
    words = sum(len(r.ref_words) for r in records)
    return sum(r.ins + r.dels + r.subs for r in records) / words if words else math.nan


def cmd_eval(args) -> int:
    cfg = _config(args, required=("model_dir",))
    m = models_mod.Models.load(cfg.model_dir)
    records = evaluate_files(args.hyp, args.ref, args.input, m)
    other = evaluate_files(args.compare, args.ref, args.input, m) if args.compare else None
    table = format_bucket_table(bucket_report(records),
                                bucket_report(other) if other is not None else None)
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    if args.csv:
        Path(args.csv).write_text(scatter_csv(records), encoding="utf-8")
    print(f"aggregate WER {aggregate_wer(records) * 100:.2f}% over {len(records)} sentences")
    if other is not None:
        print(f"comparison WER {aggregate_wer(other) * 100:.2f}%")
    return EXIT_OK


# -- classes ---------------------------------------------------------------

def cmd_classes(args) -> int:
    cfg = _config(args)
    if cfg.model_dir and (Path(cfg.model_dir) / models_mod.LEXICON_FILE).exists():
        d = Path(cfg.model_dir)
        inv = PhonemeInventory.from_file(d / models_mod.INVENTORY_FILE)
        groups = BroadGroupMap.from_file(d / models_mod.GROUPS_FILE)
        lex = load_lexicon(d / models_mod.LEXICON_FILE, inv)
    else:
        cfg.validate(required=("lexicon",))
        inv, groups = _inventory(cfg)
        lex = load_lexicon(cfg.lexicon, inv)
        for word, seq, count in (load_realizations(cfg.realizations) if cfg.realizations else []):
            lex.add_realization(word, seq, count)
    model = build_classes(lex, groups, (cfg.k_min, cfg.k_max), cfg.seed)
    if args.output:
        model.save(args.output)
    else:
        sys.stdout.write(model.dumps())
    print(f"{model.k} classes over {model.member_count()} realizations "
          f"({model.score_bits:.1f} bits)", file=sys.stderr)
    return EXIT_OK


# -- synth -----------------------------------------------------------------

def cmd_synth(args) -> int:
    groups = default_broad_groups()
    data = make_synthetic(n_words=args.words, n_train=args.train, n_test=args.test,
                          tokens_per_word=args.tokens, max_rate=args.max_rate,
                          realization_rate=args.realization_rate, seed=args.seed,
                          groups=groups)
    paths = write_synthetic(data, args.out_dir)
    conf = Config(lexicon=Path("lexicon.txt"), tagged_corpus=Path("train.tagged"),
                  realizations=Path("realizations.txt"), pairs=Path("pairs.txt"),
                  model_dir=Path("model"), grammar=Path("grammar.txt"), seed=args.seed)
    (Path(args.out_dir) / "config.txt").write_text(conf.dumps(), encoding="utf-8")
    print(f"wrote {len(paths) + 1} files to {args.out_dir}: {len(data.lexicon)} words, "
          f"{len(data.train)} training and {len(data.test)} test sentences")
    return EXIT_OK


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lexaccess",
                                description="MML lexical access: phonemes to words.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("-c", "--config", help="key = value configuration file")
        sp.add_argument("--model-dir", help="model directory (overrides config)")
        sp.add_argument("--seed", type=int, help="random seed (overrides config)")

    def search_flags(sp):
        sp.add_argument("--beam-bits", type=float, help="pruning margin in bits")
        sp.add_argument("--max-beam", type=int, help="hypotheses kept per pool")
        sp.add_argument("--top-k", type=int, help="hypotheses reported per line")
        sp.add_argument("--lm", choices=("pos", "word"), help="language model")
        sp.add_argument("--no-shortlist", action="store_true",
                        help="score every lexicon word instead of the class short-list")

    sp = sub.add_parser("train", help="fit every model and write the model directory")
    common(sp)
    sp.add_argument("--no-shortlist", action="store_true", help="skip building classes")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("decode", help="decode phoneme lines into sentences")
    common(sp)
    search_flags(sp)
    sp.add_argument("input", help="one phoneme sequence per line ('|' tokens ignored)")
    sp.add_argument("-o", "--output", help="write results here instead of stdout")
    sp.add_argument("--breakdown", action="store_true",
                    help="add a per-word bit breakdown table for each hypothesis")
    sp.set_defaults(func=cmd_decode)

    sp = sub.add_parser("eval", help="score hypotheses against references")
    common(sp)
    sp.add_argument("hyp", help="decode output (words TAB bits ...)")
    sp.add_argument("ref", help="reference word lines")
    sp.add_argument("input", help="input phoneme lines; '|' marks true word boundaries")
    sp.add_argument("--compare", help="second hypothesis file for a side-by-side table")
    sp.add_argument("--table", help="write the bucket table here instead of stdout")
    sp.add_argument("--csv", help="write the bits/phoneme vs WER scatter CSV here")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("classes", help="build and dump the equivalence classes")
    common(sp)
    sp.add_argument("-o", "--output", help="class dump path (default stdout)")
    sp.set_defaults(func=cmd_classes)

    sp = sub.add_parser("synth", help="write a synthetic corpus with ground truth")
    sp.add_argument("out_dir")
    sp.add_argument("--words", type=int, default=120)
    sp.add_argument("--train", type=int, default=1500)
    sp.add_argument("--test", type=int, default=200)
    sp.add_argument("--tokens", type=int, default=4, help="realizations sampled per word")
    sp.add_argument("--max-rate", type=float, default=0.4, help="highest test corruption rate")
    sp.add_argument("--realization-rate", type=float, default=0.0,
                    help="corruption applied to sampled realizations")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (LexAccessError, OSError, ValueError) as exc:
        print(f"lexaccess {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
