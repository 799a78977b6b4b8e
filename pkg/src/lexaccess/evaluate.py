"""Scoring decoded sentences against references."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .align import CostModel, OpKind, align
from .errors import InvalidArgs, UnknownWord
from .lexicon import Lexicon


@dataclass
class EvalRecord:
    sentence_id: str
    ref_words: list
    hyp_words: list
    ins: int
    dels: int
    subs: int
    wer: float
    distortion: float = 0.0
    bits_per_phoneme: float = 0.0


def word_error_rate(hyp, ref):
    """Word-level Levenshtein alignment with unit costs.

    Returns ``(ins, del, sub, wer)`` counted on one optimal alignment; ties
    are resolved match/substitution first, then deletion, then insertion,
    walking back from the end.  WER is not clamped at 1.
    """
    hyp, ref = list(hyp), list(ref)
    if not ref:
        raise InvalidArgs("reference must be non-empty")
    n, m = len(ref), len(hyp)
    D = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        D[i][0] = i
    for j in range(1, m + 1):
        D[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = D[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])
            D[i][j] = min(diag, D[i - 1][j] + 1, D[i][j - 1] + 1)
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and D[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]) == D[i][j]:
            subs += ref[i - 1] != hyp[j - 1]
            i -= 1
            j -= 1
        elif i > 0 and D[i - 1][j] + 1 == D[i][j]:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ins, dels, subs, (ins + dels + subs) / n


def closest_errors(segment, word, lex: Lexicon, costs: CostModel) -> int:
    """Non-exact ops in the cheapest alignment of ``segment`` against any
    realization of ``word``."""
    if word not in lex:
        raise UnknownWord(word)
    best = None
    for r in lex[word].realizations:
        a = align(r.phonemes, segment, costs)
        if best is None or a.cost < best.cost:
            best = a
    return best.errors


def forced_boundaries(input_seq, ref_words, lex: Lexicon, costs: CostModel):
    """Segment the input into the reference words at minimum total
    alignment cost (used when true boundaries are not supplied)."""
    input_seq = tuple(input_seq)
    n, k = len(input_seq), len(ref_words)
    if k > n:
        raise InvalidArgs("more reference words than input phonemes")
    inf = float("inf")
    best = [[inf] * (n + 1) for _ in range(k + 1)]
    back = [[0] * (n + 1) for _ in range(k + 1)]
    best[0][0] = 0.0
    cache = {}
    for w in range(1, k + 1):
        word = ref_words[w - 1]
        if word not in lex:
            raise UnknownWord(word)
        for end in range(w, n - (k - w) + 1):
            for start in range(w - 1, end):
                if best[w - 1][start] == inf:
                    continue
                key = (word, start, end)
                c = cache.get(key)
                if c is None:
                    seg = input_seq[start:end]
                    c = min(align(r.phonemes, seg, costs).cost for r in lex[word].realizations)
                    cache[key] = c
                if best[w - 1][start] + c < best[w][end]:
                    best[w][end] = best[w - 1][start] + c
                    back[w][end] = start
    bounds = []
    end = n
    for w in range(k, 0, -1):
        start = back[w][end]
        bounds.append((start, end))
        end = start
    return bounds[::-1]


def distortion_rate(input_seq, ref_words, ref_boundaries, lex: Lexicon, costs: CostModel) -> float:
    """Share of input phonemes not exactly explained by the reference words.

    Each reference word's input segment is aligned against every one of its
    realizations; the closest alignment's insertions, deletions and
    substitutions are counted and the total divided by the input length.
    """
    input_seq = tuple(input_seq)
    if not input_seq:
        raise InvalidArgs("empty input")
    if ref_boundaries is None:
        ref_boundaries = forced_boundaries(input_seq, ref_words, lex, costs)
    if len(ref_boundaries) != len(ref_words):
        raise InvalidArgs("one boundary per reference word required")
    pos = 0
    for s, e in ref_boundaries:
        if s != pos or e <= s:
            raise InvalidArgs("boundaries must partition the input")
        pos = e
    if pos != len(input_seq):
        raise InvalidArgs("boundaries must cover the input")
    errors = sum(
        closest_errors(input_seq[s:e], w, lex, costs)
        for w, (s, e) in zip(ref_words, ref_boundaries)
    )
    return errors / len(input_seq)


DEFAULT_THRESHOLDS = (0.10, 0.20, 0.30, 0.40, 0.50, 0.60)


@dataclass
class BucketRow:
    threshold: float
    count: int
    avg_words: float
    avg_ins: float
    avg_dels: float
    avg_subs: float
    avg_wer: float


def bucket_report(records, thresholds=DEFAULT_THRESHOLDS):
    """Cumulative averages over records whose distortion is below each threshold."""
    thresholds = list(thresholds)
    if thresholds != sorted(thresholds):
        raise InvalidArgs("thresholds must be ascending")
    rows = []
    for t in thresholds:
        sel = [r for r in records if r.distortion < t]
        k = len(sel)
        if k == 0:
            rows.append(BucketRow(t, 0, *([float("nan")] * 5)))
            continue
        rows.append(BucketRow(
            t, k,
            sum(len(r.ref_words) for r in sel) / k,
            sum(r.ins for r in sel) / k,
            sum(r.dels for r in sel) / k,
            sum(r.subs for r in sel) / k,
            sum(r.wer for r in sel) / k,
        ))
    return rows


def format_bucket_table(left, right=None, left_label="PoS + word LM", right_label="word LM"):
    """Plain-text table: distortion threshold (%), average words, then
    average ins/del/sub and WER (%) per language model."""
    head = ["dist<%", "n", "words", "ins", "del", "sub", "WER%"]
    if right is not None:
        head += ["ins", "del", "sub", "WER%"]
    lines = []
    banner = f"{'':>22}  {left_label:<27}"
    if right is not None:
        banner += f"  {right_label}"
    lines.append(banner.rstrip())
    lines.append("  ".join(f"{h:>6}" for h in head))
    for k, row in enumerate(left):
        cells = [f"{row.threshold * 100:6.0f}", f"{row.count:6d}", f"{row.avg_words:6.2f}",
                 f"{row.avg_ins:6.2f}", f"{row.avg_dels:6.2f}", f"{row.avg_subs:6.2f}",
                 f"{row.avg_wer * 100:6.2f}"]
        if right is not None:
            r = right[k]
            cells += [f"{r.avg_ins:6.2f}", f"{r.avg_dels:6.2f}", f"{r.avg_subs:6.2f}",
                      f"{r.avg_wer * 100:6.2f}"]
        lines.append("  ".join(cells))
    return "\n".join(lines) + "\n"


SCATTER_HEADER = ("sentence_id", "bits_per_phoneme", "wer")


def scatter_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCATTER_HEADER)
    for r in records:
        w.writerow([r.sentence_id, f"{r.bits_per_phoneme:.6f}", f"{r.wer:.6f}"])
    return buf.getvalue()
