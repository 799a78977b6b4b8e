"""Level-building beam search over word boundaries and tagged words.

Every live partial sentence is extended by one more word: a segment end is
proposed within the slot bounds, suitably sized candidate words are
fetched, and each is tried with every tag it may carry.  Input positions
are settled left to right, so all partial sentences ending at a position
are known before any of them is extended.  Those sharing a consumed length
form one pruning pool: anything more than ``beam_bits`` worse than the best
is dropped and at most ``max_beam`` are kept.  Partial sentences sharing a
consumed length and language-model context are interchangeable from there
on, so only the best ``top_k`` of each such group are carried forward.

Children are scored as numpy vectors and only those that can survive their
pool become :class:`PartialHyp` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import LM_POS, LM_WORD, START_STATE, Scorer, SentenceHyp, WordCodeBreakdown
from .errors import CapExceeded, NoHypothesis
from .shortlist import classify


@dataclass
class SearchConfig:
    beam_bits: float = 30.0
    max_beam: int | None = 100
    slot_min_ph: int = 1
    slot_max_ph: int = 16
    slot_ratio: float = 2.0
    shortlist_enabled: bool = True
    top_k: int = 1
    lm: str = LM_POS
    oracle_cap: int = 12

    def __post_init__(self):
        if not self.beam_bits > 0:
            raise ValueError("beam_bits must be positive")
        if self.max_beam is not None and self.max_beam < 1:
            raise ValueError("max_beam must be at least 1")
        if not 0 < self.slot_min_ph <= self.slot_max_ph:
            raise ValueError("need 0 < slot_min_ph <= slot_max_ph")
        if self.slot_ratio < 1:
            raise ValueError("slot_ratio must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.lm not in (LM_POS, LM_WORD):
            raise ValueError(f"unknown language model {self.lm!r}")
        if self.oracle_cap < 1:
            raise ValueError("oracle_cap must be at least 1")

    @classmethod
    def unpruned(cls, **kw) -> "SearchConfig":
        kw.setdefault("shortlist_enabled", False)
        return cls(beam_bits=math.inf, max_beam=None, **kw)


@dataclass
class PartialHyp:
    consumed: int
    bits_so_far: float
    state: tuple
    key: tuple  # ((word, tag, start, end), ...)
    breakdowns: tuple

    @property
    def words(self):
        return [(w, t, (s, e)) for w, t, s, e in self.key]

    def order(self):
        return (self.bits_so_far, self.key)

    def to_sentence(self) -> SentenceHyp:
        return SentenceHyp(
            words=[(w, t) for w, t, _, _ in self.key],
            boundaries=[(s, e) for _, _, s, e in self.key],
            breakdowns=list(self.breakdowns),
            total_bits=self.bits_so_far,
        )


class _PairSpace:
    """Every (word, tag) the decoder may emit, with per-context LM vectors.

    Cached on the scorer so language-model vectors are shared by every
    sentence decoded with it.
    """

    def __init__(self, scorer: Scorer):
        self.scorer = scorer
        arrays = scorer.arrays
        lex = scorer.models.lexicon
        words, tags, off = [], [], [0]
        for w in arrays.words:
            ts = lex[w].pos_tags
            if scorer.lm == LM_WORD:
                ts = ts[:1]
            for t in ts:
                words.append(w)
                tags.append(t)
            off.append(len(words))
        self.pair_word = words
        self.pair_tag = tags
        self.off = np.array(off, dtype=np.int64)
        self.tagset = sorted(set(tags))
        tag_idx = {t: i for i, t in enumerate(self.tagset)}
        self.pair_tag_idx = np.array([tag_idx[t] for t in tags], dtype=np.int64)
        self._pos = {}
        self._word = {}
        self._lm = {}

    def __len__(self):
        return len(self.pair_word)

    def lm_vectors(self, state):
        """(pos bits, word bits, their sum) over every pair, given ``state``."""
        hit = self._lm.get(state)
        if hit is not None:
            return hit
        t2, t1, prev = state
        lms = self.scorer.models.lms
        n = len(self.pair_word)
        if self.scorer.lm == LM_POS:
            pv = self._pos.get((t2, t1))
            if pv is None:
                pv = np.array([lms.pos.code_length((t2, t1), t) for t in self.tagset])
                self._pos[(t2, t1)] = pv
            pos = pv[self.pair_tag_idx]
            word = self._word.get(prev)
            if word is None:
                word = np.array([lms.words.code_length(prev, t, w)
                                 for w, t in zip(self.pair_word, self.pair_tag)])
                self._word[prev] = word
        else:
            pos = np.zeros(n)
            word = self._word.get(prev)
            if word is None:
                word = np.array([lms.word_only.code_length(prev, w) for w in self.pair_word])
                self._word[prev] = word
        hit = (pos, word, pos + word)
        self._lm[state] = hit
        return hit

    def pairs_of(self, word_ids):
        starts = self.off[word_ids]
        counts = self.off[word_ids + 1] - starts
        total = int(counts.sum())
        if total == 0:
            return np.zeros(0, dtype=np.int64), counts
        shift = np.repeat(starts - (np.cumsum(counts) - counts), counts)
        return shift + np.arange(total), counts


class _Expander:
    """Candidate generation and word scoring shared by both searches."""

    def __init__(self, input_seq, models, cfg: SearchConfig, scorer: Scorer | None = None):
        self.input = tuple(input_seq)
        self.models = models
        self.cfg = cfg
        if scorer is None or scorer.lm != cfg.lm:
            scorer = Scorer(models, cfg.lm)
        self.scorer = scorer
        space = getattr(scorer, "_pair_space", None)
        if space is None:
            space = _PairSpace(scorer)
            scorer._pair_space = space
        self.space = space
        self.arrays = scorer.arrays
        use_classes = cfg.shortlist_enabled and models.classes is not None
        self.classes = models.classes if use_classes else None
        self._class_words = {}
        self._segs = {}
        self._pos = {}

    def _shortlist(self, seg):
        if self.classes is None:
            return None
        cid = classify(seg, self.classes, self.models.groups)
        ids = self._class_words.get(cid)
        if ids is None:
            cls = next(c for c in self.classes.classes if c.id == cid)
            ids = np.zeros(len(self.arrays.words), dtype=bool)
            ids[[self.arrays.index[w] for w in cls.words()]] = True
            self._class_words[cid] = ids
        return ids

    def ends(self, start):
        n = len(self.input)
        lo = start + self.cfg.slot_min_ph
        hi = min(n, start + self.cfg.slot_max_ph)
        return range(lo, hi + 1)

    def segment(self, start, end):
        """Candidate pairs for ``input[start:end]`` with their phoneme bits.

        Returns ``(pairs, ph_bits, realization_index)`` arrays, one entry
        per candidate (word, tag).
        """
        key = (start, end)
        hit = self._segs.get(key)
        if hit is None:
            seg = self.input[start:end]
            mask = self.arrays.fitting(end - start, self.cfg.slot_ratio)
            short = self._shortlist(seg)
            if short is not None:
                mask = mask & short
            word_ids = np.flatnonzero(mask).astype(np.int64)
            if word_ids.size:
                ph, js = self.scorer.ph_many(seg, word_ids)
            else:
                ph, js = np.zeros(0), np.zeros(0, dtype=np.int64)
            pairs, counts = self.space.pairs_of(word_ids)
            hit = (pairs, np.repeat(ph, counts), np.repeat(js, counts))
            self._segs[key] = hit
        return hit

    def position(self, start):
        """Candidates for every segment starting at ``start``, concatenated.

        Returns ``(pairs, ph_bits, realization_index, ends, cuts)``; entries
        are grouped by ascending end and ``cuts[i]:cuts[i+1]`` spans the
        entries of ``ends_present[i]``.
        """
        hit = self._pos.get(start)
        if hit is None:
            parts = [(e,) + self.segment(start, e) for e in self.ends(start)]
            parts = [x for x in parts if x[1].size]
            if parts:
                pairs = np.concatenate([x[1] for x in parts])
                ph = np.concatenate([x[2] for x in parts])
                js = np.concatenate([x[3] for x in parts])
                ends = np.array([x[0] for x in parts], dtype=np.int64)
                sizes = np.array([x[1].size for x in parts], dtype=np.int64)
                end_of = np.repeat(ends, sizes)
            else:
                pairs = js = end_of = ends = np.zeros(0, dtype=np.int64)
                ph = np.zeros(0)
            hit = (pairs, ph, js, end_of, ends)
            self._pos[start] = hit
        return hit

    def candidates(self, start, end):
        pairs = self.segment(start, end)[0]
        sp = self.space
        return [(sp.pair_word[p], sp.pair_tag[p]) for p in pairs]

    def extend(self, h: PartialHyp):
        """Every child of ``h``, scored one word at a time."""
        for end in self.ends(h.consumed):
            seg = self.input[h.consumed:end]
            for w, t in self.candidates(h.consumed, end):
                bd = self.scorer.word(h.state, w, t, seg, (h.consumed, end))
                yield PartialHyp(
                    consumed=end,
                    bits_so_far=h.bits_so_far + bd.total_bits,
                    state=self.scorer.next_state(h.state, w, t),
                    key=h.key + ((w, t, h.consumed, end),),
                    breakdowns=h.breakdowns + (bd,),
                )


@dataclass
class _Chunk:
    """Children of one pool that end at the same position."""
    pool: list  # parent PartialHyps
    start: int  # their consumed length
    t1: np.ndarray  # id of each parent's last tag
    rows: np.ndarray  # parent index per child
    cols: np.ndarray  # index into the start position's candidate arrays
    bits: np.ndarray


def _kth_smallest(values, k):
    """The k-th smallest value (1-based), or inf if there are fewer."""
    if k is None or values.size <= k:
        return math.inf
    return float(np.partition(values, k - 1)[k - 1])


def _prune(pool, cfg: SearchConfig):
    pool.sort(key=PartialHyp.order)
    limit = pool[0].bits_so_far + cfg.beam_bits
    kept = [h for h in pool if h.bits_so_far <= limit]
    if cfg.max_beam is not None:
        kept = kept[: cfg.max_beam]
    return kept


class _Decoder:
    def __init__(self, ex: _Expander, cfg: SearchConfig):
        self.ex = ex
        self.cfg = cfg
        self.arrivals = {}
        self.best = np.full(len(ex.input) + 1, math.inf)
        self.t1_ids = {}

    def expand(self, start, pool):
        """Score every child of ``pool`` as one hypotheses x candidates matrix."""
        ex, cfg = self.ex, self.cfg
        pairs, ph, _, end_of, ends = ex.position(start)
        if not pairs.size or not pool:
            return
        base = np.array([h.bits_so_far for h in pool])
        t1 = self._t1(pool)
        lm = np.stack([ex.space.lm_vectors(h.state)[2] for h in pool])
        bits = base[:, None] + (lm[:, pairs] + ph[None, :])
        cuts = np.r_[np.flatnonzero(np.r_[True, end_of[1:] != end_of[:-1]]), end_of.size]
        low = np.minimum.reduceat(bits.min(axis=0), cuts[:-1])
        self.best[ends] = np.minimum(self.best[ends], low)
        for g, end in enumerate(ends):
            a, b = cuts[g], cuts[g + 1]
            block = bits[:, a:b]
            limit = np.full((len(pool), 1), self.best[end] + cfg.beam_bits)
            if cfg.max_beam is not None and b - a > cfg.max_beam:
                # A parent's children at one end all fall in distinct
                # groups, so only its max_beam cheapest can survive.
                kth = np.partition(block, cfg.max_beam - 1, axis=1)[:, cfg.max_beam - 1:cfg.max_beam]
                limit = np.minimum(limit, kth)
            rows, cols = np.nonzero(block <= limit)
            if rows.size:
                self.arrivals.setdefault(int(end), []).append(
                    _Chunk(pool, start, t1, rows, cols + a, block[rows, cols]))

    def settle(self, pos) -> list:
        """Recombine and prune everything arriving at ``pos``."""
        chunks = self.arrivals.pop(pos, [])
        if not chunks:
            return []
        cfg = self.cfg
        n_pairs = len(self.ex.space)
        sizes = [c.bits.size for c in chunks]
        offsets = np.r_[0, np.cumsum(sizes)]
        which = np.repeat(np.arange(len(chunks)), sizes)
        bits = np.concatenate([c.bits for c in chunks])
        pairs = np.concatenate([self.ex.position(c.start)[0][c.cols] for c in chunks])
        t1 = np.concatenate([c.t1[c.rows] for c in chunks])
        group = t1 * n_pairs + pairs
        # Coarse pass on floats only; ties are kept so the exact pass below
        # sees every item it could pick.
        order = np.lexsort((bits, group))
        g_sorted = group[order]
        starts = np.flatnonzero(np.r_[True, g_sorted[1:] != g_sorted[:-1]])
        g_sizes = np.diff(np.r_[starts, order.size])
        rank = np.arange(order.size) - np.repeat(starts, g_sizes)
        reps = order[rank < cfg.top_k]
        kth = np.where(g_sizes >= cfg.top_k,
                       bits[order[starts + np.minimum(g_sizes, cfg.top_k) - 1]], math.inf)
        group_limit = np.empty(order.size)
        group_limit[order] = np.repeat(kth, g_sizes)
        limit = min(float(bits.min()) + cfg.beam_bits, _kth_smallest(bits[reps], cfg.max_beam))
        keep = np.flatnonzero((bits <= group_limit) & (bits <= limit))
        pool = [self._child(chunks[which[i]], i - offsets[which[i]], pos) for i in keep]
        return self._exact(pool)

    def _t1(self, pool):
        ids = self.t1_ids
        return np.array([ids.setdefault(h.state[1], len(ids)) for h in pool], dtype=np.int64)

    def _child(self, chunk: _Chunk, i, end):
        h = chunk.pool[chunk.rows[i]]
        sp = self.ex.space
        pairs, ph_all, js_all, _, _ = self.ex.position(chunk.start)
        k = chunk.cols[i]
        p = int(pairs[k])
        ph = ph_all[k]
        w, t = sp.pair_word[p], sp.pair_tag[p]
        pos_v, word_v, _ = sp.lm_vectors(h.state)
        bd = WordCodeBreakdown(w, t, float(pos_v[p]), float(word_v[p]), float(ph),
                               float(pos_v[p] + word_v[p] + ph), int(js_all[k]),
                               (h.consumed, end))
        return PartialHyp(end, float(chunk.bits[i]), (h.state[1], t, w),
                          h.key + ((w, t, h.consumed, end),), h.breakdowns + (bd,))

    def _exact(self, pool):
        groups = {}
        for h in pool:
            groups.setdefault(h.state, []).append(h)
        merged = []
        for slot in groups.values():
            slot.sort(key=PartialHyp.order)
            merged.extend(slot[: self.cfg.top_k])
        return _prune(merged, self.cfg) if merged else []


def decode(input_seq, models, cfg: SearchConfig | None = None, scorer: Scorer | None = None,
           trace=None):
    """Decode a phoneme sequence into ranked sentence hypotheses.

    Returns up to ``cfg.top_k`` complete hypotheses, cheapest first (ties
    ordered by their word/tag/boundary key).  ``trace``, if a list, receives
    every surviving :class:`PartialHyp` pool by pool.

    Raises
    ------
    NoHypothesis
        When no sequence of candidate words tiles the input under ``cfg``.
    """
    cfg = cfg or SearchConfig()
    input_seq = tuple(input_seq)
    if not input_seq:
        raise ValueError("cannot decode an empty phoneme sequence")
    n = len(input_seq)
    dec = _Decoder(_Expander(input_seq, models, cfg, scorer), cfg)
    complete = []
    for pos in range(n + 1):
        pool = [PartialHyp(0, 0.0, START_STATE, (), ())] if pos == 0 else dec.settle(pos)
        if trace is not None and pos > 0:
            trace.extend(pool)
        if pos == n:
            complete = pool
            break
        dec.expand(pos, pool)
    if not complete:
        raise NoHypothesis("no word sequence tiles the input under the slot constraints")
    return [h.to_sentence() for h in complete[: cfg.top_k]]


def exhaustive_decode(input_seq, models, cfg: SearchConfig | None = None) -> SentenceHyp:
    """Global minimum over every segmentation and word/tag assignment.

    Depth-first enumeration; a branch is abandoned only once its partial
    cost already exceeds the best complete sentence, which is safe because
    every code length is non-negative.  Beam settings in ``cfg`` are
    ignored; slot bounds, slot ratio and short-listing are honoured.
    """
    cfg = cfg or SearchConfig.unpruned()
    input_seq = tuple(input_seq)
    n = len(input_seq)
    if not input_seq:
        raise ValueError("cannot decode an empty phoneme sequence")
    if n > cfg.oracle_cap:
        raise CapExceeded(f"input length {n} exceeds oracle cap {cfg.oracle_cap}")
    ex = _Expander(input_seq, models, cfg)
    best = None

    def visit(h):
        nonlocal best
        if h.consumed == n:
            if best is None or h.order() < best.order():
                best = h
            return
        for child in ex.extend(h):
            if best is not None and child.bits_so_far > best.bits_so_far:
                continue
            visit(child)

    visit(PartialHyp(0, 0.0, START_STATE, (), ()))
    if best is None:
        raise NoHypothesis("no word sequence tiles the input under the slot constraints")
    return best.to_sentence()
