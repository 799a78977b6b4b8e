"""Message lengths for words, realizations and phoneme differences.

A sentence hypothesis is coded word by word.  Each word costs its language
model bits (tag trigram plus word bigram) and the bits needed to rebuild
its input segment from the best-fitting trained realization: which
realization, how many insertions and where, then every aligned input
phoneme given its intended phoneme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .align import (
    Alignment,
    ConfusionModel,
    CostModel,
    InsertionCountDist,
    _align_kernel,
    _ops_to_alignment,
    _score_kernel,
    align,
    align_codes,
)
from .errors import IndexOutOfRange, InvalidArgs, MissingProbability, UnknownWord
from .lexicon import EOS1, EOS2, EOS_WORD, LexEntry
from .phonemes import GAP

LM_POS = "pos"
LM_WORD = "word"


@dataclass
class WordCodeBreakdown:
    word: str
    tag: str
    pos_bits: float
    word_bits: float
    ph_diff_bits: float
    total_bits: float
    chosen_realization: int
    segment: tuple = ()  # (start, end) in the input


@dataclass
class SentenceHyp:
    words: list  # [(word, tag), ...]
    boundaries: list  # [(start, end), ...]
    breakdowns: list = field(default_factory=list)
    total_bits: float = 0.0

    @property
    def word_list(self):
        return [w for w, _ in self.words]

    def key(self):
        return tuple((w, t, s, e) for (w, t), (s, e) in zip(self.words, self.boundaries))

    def text(self):
        return " ".join(self.word_list)


def realization_code_length(entry: LexEntry, j: int) -> float:
    if not 0 <= j < len(entry.realizations):
        raise IndexOutOfRange(f"{entry.word!r} has no realization {j}")
    return -math.log2(entry.realizations[j].freq / entry.total_freq)


def insertion_position_bits(L: int, N: int) -> float:
    """log2 C(L, N): where the N insertions sit in an alignment of length L."""
    if not 0 <= N <= L:
        raise InvalidArgs(f"need 0 <= N <= L, got N={N}, L={L}")
    return math.log2(math.comb(L, N))


def insertion_code_length(L: int, N: int, dist: InsertionCountDist) -> float:
    position = insertion_position_bits(L, N)
    return dist.bits(N) + position


def substitution_code_length(a: Alignment, conf: ConfusionModel) -> float:
    total = 0.0
    for op in a.ops:
        if op.intended == GAP and op.observed == GAP:
            raise MissingProbability(GAP, GAP)
        try:
            i = conf.table.idx(op.intended)
            o = conf.table.idx(op.observed)
        except Exception:
            raise MissingProbability(op.intended, op.observed) from None
        total += conf.bits[i, o]
    return total


def _realization_scores(segment, entry, conf, dist, costs):
    """Yield (bits, j, codes) per realization of ``entry``."""
    table = conf.table
    b = table.encode(segment)
    total = entry.total_freq
    for j, r in enumerate(entry.realizations):
        codes, _ = align_codes(r.phonemes, segment, costs)
        a = table.encode(r.phonemes)
        n_ins, sub_bits = _score_kernel(a, b, codes, conf.bits, table.gap)
        L = codes.shape[0]
        real_bits = -math.log2(r.freq / total)
        ins_bits = dist.bits(n_ins) + math.log2(math.comb(L, n_ins))
        yield real_bits + ins_bits + sub_bits, j, codes


def best_realization(segment, entry, conf, dist, costs):
    """(bits, j, codes) of the cheapest realization; ties go to the lowest j."""
    segment = tuple(segment)
    best = None
    for bits, j, codes in _realization_scores(segment, entry, conf, dist, costs):
        if best is None or bits < best[0]:
            best = (bits, j, codes)
    return best


def phoneme_diff_code_length(segment, entry: LexEntry, conf: ConfusionModel,
                             dist: InsertionCountDist, costs: CostModel):
    """Bits to send ``segment`` given the word ``entry``.

    Every realization is aligned against the segment and costed as
    realization choice + insertion count and positions + per-op
    substitution code; the cheapest one wins.

    Returns
    -------
    (bits, j, Alignment)
    """
    segment = tuple(segment)
    bits, j, codes = best_realization(segment, entry, conf, dist, costs)
    intended = entry.realizations[j].phonemes
    cost = _alignment_cost(intended, segment, codes, costs)
    return bits, j, _ops_to_alignment(costs.table, intended, segment, codes, cost)


def _alignment_cost(intended, observed, codes, costs):
    t = costs.table
    m = costs.matrix
    i = j = 0
    total = 0.0
    for c in codes:
        if c <= 1:
            total += m[t.idx(intended[i]), t.idx(observed[j])]
            i += 1
            j += 1
        elif c == 2:
            total += m[t.idx(intended[i]), t.gap]
            i += 1
        else:
            total += m[t.gap, t.idx(observed[j])]
            j += 1
    return float(total)


def phoneme_diff_terms(segment, entry, j, conf, dist, costs):
    """The three terms for realization ``j`` computed through the public
    per-term functions (slow path, used to cross-check the search)."""
    a = align(entry.realizations[j].phonemes, segment, costs)
    return (
        realization_code_length(entry, j),
        insertion_code_length(a.L, a.N, dist),
        substitution_code_length(a, conf),
    )


@numba.njit(cache=True)
def _word_scores(flat, r_off, w_off, word_ids, real_bits, b, cost, bits, gap, ins_bits, log_comb):
    """Best realization bits and index for each word in ``word_ids``."""
    out = np.empty(word_ids.shape[0])
    js = np.empty(word_ids.shape[0], dtype=np.int64)
    for k in range(word_ids.shape[0]):
        w = word_ids[k]
        best = np.inf
        bj = -1
        for r in range(w_off[w], w_off[w + 1]):
            a = flat[r_off[r]:r_off[r + 1]]
            ops, _ = _align_kernel(a, b, cost, gap)
            n_ins, sub = _score_kernel(a, b, ops, bits, gap)
            v = real_bits[r] + (ins_bits[n_ins] + log_comb[ops.shape[0], n_ins]) + sub
            if v < best:
                best = v
                bj = r - w_off[w]
        out[k] = best
        js[k] = bj
    return out, js


class LexiconArrays:
    """Flat, encoded view of every realization for batch scoring."""

    def __init__(self, models):
        lex = models.lexicon
        table = models.confusion.table
        if tuple(models.costs.table.symbols) != tuple(table.symbols):
            raise InvalidArgs("cost and confusion models use different inventories")
        self.table = table
        self.words = lex.words()
        self.index = {w: i for i, w in enumerate(self.words)}
        flat, r_off, w_off, real = [], [0], [0], []
        lengths = []
        for w in self.words:
            e = lex[w]
            total = e.total_freq
            for r in e.realizations:
                flat.extend(table.idx(s) for s in r.phonemes)
                r_off.append(len(flat))
                real.append(-math.log2(r.freq / total))
            w_off.append(len(real))
            lengths.append(sorted({len(r.phonemes) for r in e.realizations}))
        self.flat = np.array(flat, dtype=np.int64)
        self.r_off = np.array(r_off, dtype=np.int64)
        self.w_off = np.array(w_off, dtype=np.int64)
        self.real_bits = np.array(real, dtype=np.float64)
        self.lengths = lengths
        self.max_real = max((ls[-1] for ls in lengths), default=0)
        self.cost = np.ascontiguousarray(models.costs.matrix, dtype=np.float64)
        self.bits = np.ascontiguousarray(models.confusion.bits, dtype=np.float64)
        self.dist = models.insertion
        self._size = -1
        self.ins_bits = self.log_comb = None
        self._fit = {}

    def tables(self, seg_len):
        size = self.max_real + seg_len + 1
        if size > self._size:
            self._size = size
            self.ins_bits = np.array([self.dist.bits(n) for n in range(size)])
            lc = np.full((size, size), np.inf)
            for L in range(size):
                for n in range(L + 1):
                    lc[L, n] = math.log2(math.comb(L, n))
            self.log_comb = lc
        return self.ins_bits, self.log_comb

    def scores(self, segment, word_ids):
        b = self.table.encode(segment)
        ins_bits, log_comb = self.tables(len(segment))
        return _word_scores(self.flat, self.r_off, self.w_off, word_ids, self.real_bits, b,
                            self.cost, self.bits, self.table.gap, ins_bits, log_comb)

    def fitting(self, seg_len, ratio):
        """Boolean mask of words having a realization length within ``ratio``."""
        key = (seg_len, ratio)
        hit = self._fit.get(key)
        if hit is None:
            hit = np.array([any(max(seg_len / r, r / seg_len) <= ratio for r in ls)
                            for ls in self.lengths], dtype=bool)
            self._fit[key] = hit
        return hit


class Scorer:
    """Caching word scorer over a trained model bundle.

    ``lm`` selects the language model: ``"pos"`` codes tag trigrams and
    word-given-tag bigrams, ``"word"`` codes plain word bigrams (its tag
    column is always zero bits).
    """

    PH_CACHE_LIMIT = 500_000

    def __init__(self, models, lm=LM_POS):
        if lm not in (LM_POS, LM_WORD):
            raise ValueError(f"unknown language model {lm!r}")
        self.models = models
        self.lm = lm
        self._ph = {}
        self._arrays = None

    @property
    def arrays(self) -> LexiconArrays:
        if self._arrays is None:
            self._arrays = LexiconArrays(self.models)
        return self._arrays

    def ph_many(self, segment, word_ids):
        """(bits, j) arrays for the words with the given lexicon indices."""
        segment = tuple(segment)
        word_ids = np.asarray(word_ids, dtype=np.int64)
        return self.arrays.scores(segment, word_ids)

    def ph_diff(self, segment, word):
        key = (segment, word)
        hit = self._ph.get(key)
        if hit is None:
            idx = self.arrays.index.get(word)
            if idx is None:
                raise UnknownWord(word)
            bits, js = self.ph_many(segment, np.array([idx]))
            hit = (float(bits[0]), int(js[0]))
            if len(self._ph) > self.PH_CACHE_LIMIT:
                self._ph.clear()
            self._ph[key] = hit
        return hit

    def lm_bits(self, state, word, tag):
        t2, t1, prev = state
        lms = self.models.lms
        if self.lm == LM_POS:
            return lms.pos.code_length((t2, t1), tag), lms.words.code_length(prev, tag, word)
        return 0.0, lms.word_only.code_length(prev, word)

    def word(self, state, word, tag, segment, span=()):
        pos_bits, word_bits = self.lm_bits(state, word, tag)
        ph_bits, j = self.ph_diff(segment, word)
        total = pos_bits + word_bits + ph_bits
        return WordCodeBreakdown(word, tag, pos_bits, word_bits, ph_bits, total, j, span)

    @staticmethod
    def next_state(state, word, tag):
        return (state[1], tag, word)


START_STATE = (EOS2, EOS1, EOS_WORD)


def sentence_code_length(input_seq, words, boundaries, models, lm=LM_POS,
                         scorer: Scorer | None = None, state=START_STATE) -> SentenceHyp:
    """Score a full hypothesis: tagged words plus the segment of the input
    each one covers.  ``state`` carries the (tag, tag, word) context of any
    words preceding this stretch of input."""
    input_seq = tuple(input_seq)
    if len(words) != len(boundaries):
        raise InvalidArgs("one boundary pair per word required")
    pos = 0
    for s, e in boundaries:
        if s != pos or e <= s:
            raise InvalidArgs("boundaries must be contiguous and non-empty")
        pos = e
    if pos != len(input_seq):
        raise InvalidArgs("boundaries must cover the input")
    scorer = scorer or Scorer(models, lm)
    out = []
    total = 0.0
    for (w, t), (s, e) in zip(words, boundaries):
        bd = scorer.word(state, w, t, input_seq[s:e], (s, e))
        out.append(bd)
        total += bd.total_bits
        state = scorer.next_state(state, w, t)
    return SentenceHyp(list(words), list(boundaries), out, total)


def bits_per_phoneme(h: SentenceHyp, input_len: int) -> float:
    if input_len <= 0:
        raise InvalidArgs("input length must be positive")
    return h.total_bits / input_len


BREAKDOWN_HEADER = ("word", "PoS bits", "word bits", "phDiff bits", "total")


def format_breakdown(h: SentenceHyp, title=None) -> str:
    """Plain-text table with one row per word: word, tag and PoS bits, word
    bits, phDiff bits and total, then a footer of column sums."""
    rows = [BREAKDOWN_HEADER]
    sums = [0.0, 0.0, 0.0, 0.0]
    for bd in h.breakdowns:
        vals = (bd.pos_bits, bd.word_bits, bd.ph_diff_bits, bd.total_bits)
        rows.append((bd.word, f"{bd.tag} {vals[0]:.2f}") + tuple(f"{v:.2f}" for v in vals[1:]))
        sums = [a + v for a, v in zip(sums, vals)]
    rows.append(("",) + tuple(f"{v:.2f}" for v in sums))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    rule = "-" * (sum(widths) + 2 * 4)
    lines = [title] if title else []
    for k, r in enumerate(rows):
        if k == len(rows) - 1:
            lines.append(rule)
        cells = [r[0].ljust(widths[0])] + [r[c].rjust(widths[c]) for c in range(1, 5)]
        lines.append("  ".join(cells).rstrip())
        if k == 0:
            lines.append(rule)
    return "\n".join(lines) + "\n"


def parse_breakdown(text):
    """Rows and footer of a :func:`format_breakdown` table.

    Returns ``(rows, footer)`` where each row is ``(word, tag, pos, word_bits,
    ph_diff, total)`` and the footer holds the four column sums.
    """
    rows, footer = [], None
    for line in text.splitlines():
        parts = line.split()
        if not parts or set(line.strip()) == {"-"} or parts[0] == "word":
            continue
        try:
            nums = [float(x) for x in parts[-4:]]
        except ValueError:
            continue
        if len(parts) == 4:
            footer = tuple(nums)
        elif len(parts) == 6:
            rows.append((parts[0], parts[1], *nums))
    return rows, footer
