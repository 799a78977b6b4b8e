"""Edit-distance alignment of intended and observed phoneme sequences.

Costs and probabilities are stored as ``(K + 1) x (K + 1)`` matrices over
the inventory, the last row/column standing for the gap ``"-"``:
``m[x, GAP]`` is deleting ``x`` and ``m[GAP, y]`` is inserting ``y``.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from .errors import InsufficientData, MissingProbability, UnknownPhoneme
from .phonemes import GAP, BroadGroupMap, PhonemeInventory

MATCH, SUBSTITUTE, DELETE, INSERT = 0, 1, 2, 3
_TIE_TOL = 1e-9


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


_KINDS = (OpKind.MATCH, OpKind.SUBSTITUTE, OpKind.DELETE, OpKind.INSERT)


@dataclass(frozen=True)
class EditOp:
    kind: OpKind
    intended: str
    observed: str


@dataclass(frozen=True)
class Alignment:
    ops: tuple
    cost: float

    @property
    def L(self) -> int:
        return len(self.ops)

    @property
    def N(self) -> int:
        return sum(1 for op in self.ops if op.kind is OpKind.INSERT)

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    @property
    def errors(self) -> int:
        """Insertions, deletions and non-exact substitutions."""
        return sum(1 for op in self.ops if op.kind is not OpKind.MATCH)

    def intended(self):
        return tuple(op.intended for op in self.ops if op.intended != GAP)

    def observed(self):
        return tuple(op.observed for op in self.ops if op.observed != GAP)

    def pretty(self, top="intended", bottom="observed") -> str:
        return format_alignment(self, top, bottom)


def format_alignment(a: Alignment, top="intended", bottom="observed") -> str:
    """Two-row display, gaps shown as ``-``."""
    cols = [(op.intended, op.observed) for op in a.ops]
    widths = [max(len(x), len(y)) for x, y in cols]
    label = max(len(top), len(bottom))
    row1 = top.ljust(label) + "  " + " ".join(x.ljust(w) for (x, _), w in zip(cols, widths))
    row2 = bottom.ljust(label) + "  " + " ".join(y.ljust(w) for (_, y), w in zip(cols, widths))
    return row1.rstrip() + "\n" + row2.rstrip()


@numba.njit(cache=True)
def _align_kernel(a, b, cost, gap):
    n = a.shape[0]
    m = b.shape[0]
    D = np.empty((n + 1, m + 1))
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        D[i, 0] = D[i - 1, 0] + cost[a[i - 1], gap]
    for j in range(1, m + 1):
        D[0, j] = D[0, j - 1] + cost[gap, b[j - 1]]
    for i in range(1, n + 1):
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = D[i - 1, j - 1] + cost[ai, b[j - 1]]
            v = D[i - 1, j] + cost[ai, gap]
            if v < best:
                best = v
            v = D[i, j - 1] + cost[gap, b[j - 1]]
            if v < best:
                best = v
            D[i, j] = best
    ops = np.empty(n + m, dtype=np.int8)
    k = 0
    i = n
    j = m
    while i > 0 or j > 0:
        here = D[i, j] + 1e-9
        if i > 0 and j > 0 and D[i - 1, j - 1] + cost[a[i - 1], b[j - 1]] <= here:
            ops[k] = 0 if a[i - 1] == b[j - 1] else 1
            i -= 1
            j -= 1
        elif i > 0 and D[i - 1, j] + cost[a[i - 1], gap] <= here:
            ops[k] = 2
            i -= 1
        else:
            ops[k] = 3
            j -= 1
        k += 1
    return ops[:k][::-1].copy(), D[n, m]


@numba.njit(cache=True)
def _score_kernel(a, b, ops, bits, gap):
    """Insertion count and substitution bits of an op script."""
    i = 0
    j = 0
    n_ins = 0
    total = 0.0
    for k in range(ops.shape[0]):
        o = ops[k]
        if o <= 1:
            total += bits[a[i], b[j]]
            i += 1
            j += 1
        elif o == 2:
            total += bits[a[i], gap]
            i += 1
        else:
            total += bits[gap, b[j]]
            n_ins += 1
            j += 1
    return n_ins, total


class _SymbolTable:
    """Inventory-backed index shared by cost and confusion matrices."""

    def __init__(self, inventory: PhonemeInventory):
        self.inventory = inventory
        self.symbols = tuple(inventory.symbols)
        self.gap = len(self.symbols)
        self.index = {s: i for i, s in enumerate(self.symbols)}
        self.index[GAP] = self.gap
        self._encoded = {}

    def idx(self, symbol) -> int:
        try:
            return self.index[symbol]
        except KeyError:
            raise UnknownPhoneme(symbol) from None

    def encode(self, seq) -> np.ndarray:
        arr = self._encoded.get(seq)
        if arr is None:
            arr = np.fromiter((self.idx(s) for s in seq), dtype=np.int64, count=len(seq))
            if len(self._encoded) < 200_000:
                self._encoded[seq] = arr
        return arr

    def symbol(self, i) -> str:
        return GAP if i == self.gap else self.symbols[i]


# Pairs that are near-interchangeable in ARPAbet transcriptions.
SIMILAR_PAIRS = (
    ("dh", "dx"), ("t", "dx"), ("d", "dx"), ("n", "nx"), ("ax", "ix"),
    ("ax", "ah"), ("ix", "ih"), ("ax", "ax-h"), ("er", "axr"), ("l", "el"),
    ("n", "en"), ("m", "em"), ("ng", "eng"), ("uw", "ux"), ("hh", "hv"),
    ("iy", "ix"), ("ix", "iy"),
)
_OBSTRUENT = {"stop", "fricative", "affricate"}
_SONORANT = {"nasal", "liquid-glide"}


def _class_cost(gx, gy):
    if gx == gy:
        return 0.4
    if {gx, gy} <= _OBSTRUENT or {gx, gy} <= _SONORANT:
        return 0.8
    if "silence" in (gx, gy):
        return 1.5
    if "vowel" in (gx, gy):
        other = gy if gx == "vowel" else gx
        if other == "liquid-glide":
            return 1.2
        if other in _OBSTRUENT | _SONORANT:
            return 2.5
    return 1.5


class CostModel:
    """Alignment costs: substitution, insertion and deletion weights."""

    def __init__(self, inventory: PhonemeInventory, matrix):
        self.table = _SymbolTable(inventory)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        k = len(inventory) + 1
        if self.matrix.shape != (k, k):
            raise ValueError(f"cost matrix must be {k}x{k}")
        if (self.matrix < 0).any():
            raise ValueError("costs must be non-negative")
        np.fill_diagonal(self.matrix, 0.0)
        self.matrix[-1, -1] = 0.0

    @property
    def inventory(self):
        return self.table.inventory

    def sub_cost(self, x, y) -> float:
        return float(self.matrix[self.table.idx(x), self.table.idx(y)])

    def ins_cost(self, y) -> float:
        return float(self.matrix[self.table.gap, self.table.idx(y)])

    def del_cost(self, x) -> float:
        return float(self.matrix[self.table.idx(x), self.table.gap])

    @classmethod
    def phonetic(cls, inventory: PhonemeInventory, groups: BroadGroupMap | None = None,
                 indel=1.0) -> "CostModel":
        """Hand-set costs: cheap within a broad group, dear across vowel/consonant."""
        syms = inventory.symbols
        k = len(syms)
        m = np.empty((k + 1, k + 1))
        for i, x in enumerate(syms):
            for j, y in enumerate(syms):
                if i == j:
                    m[i, j] = 0.0
                elif groups is not None and x in groups.mapping and y in groups.mapping:
                    m[i, j] = _class_cost(groups[x], groups[y])
                else:
                    m[i, j] = 1.5
        idx = {s: i for i, s in enumerate(syms)}
        for x, y in SIMILAR_PAIRS:
            if x in idx and y in idx:
                m[idx[x], idx[y]] = m[idx[y], idx[x]] = 0.3
        m[:, k] = indel
        m[k, :] = indel
        m[k, k] = 0.0
        return cls(inventory, m)

    @classmethod
    def unit(cls, inventory: PhonemeInventory) -> "CostModel":
        k = len(inventory)
        return cls(inventory, np.ones((k + 1, k + 1)))

    def to_dict(self):
        return {"symbols": list(self.table.symbols), "matrix": self.matrix.tolist()}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CostModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(PhonemeInventory(tuple(doc["symbols"])), doc["matrix"])


class ConfusionModel:
    """P(observed | intended), gap row for insertions, gap column for deletions."""

    def __init__(self, inventory: PhonemeInventory, prob):
        self.table = _SymbolTable(inventory)
        self.prob = np.asarray(prob, dtype=np.float64)
        g = self.table.gap
        self.prob[g, g] = 0.0
        with np.errstate(divide="ignore"):
            self.bits = -np.log2(self.prob)
        self.bits[g, g] = np.inf

    @property
    def inventory(self):
        return self.table.inventory

    def p(self, observed, intended) -> float:
        if intended == GAP and observed == GAP:
            raise MissingProbability(intended, observed)
        return float(self.prob[self.table.idx(intended), self.table.idx(observed)])

    def row_sums(self):
        return self.prob.sum(axis=1)

    @classmethod
    def from_costs(cls, costs: CostModel) -> "ConfusionModel":
        """Untrained model: P proportional to 2^-cost within each row."""
        w = np.exp2(-costs.matrix)
        g = costs.table.gap
        w[g, g] = 0.0
        w /= w.sum(axis=1, keepdims=True)
        return cls(costs.inventory, w)

    @classmethod
    def from_counts(cls, inventory: PhonemeInventory, counts, eps=0.5) -> "ConfusionModel":
        c = np.asarray(counts, dtype=np.float64) + eps
        g = len(inventory)
        c[g, g] = 0.0
        return cls(inventory, c / c.sum(axis=1, keepdims=True))

    def to_dict(self):
        return {"symbols": list(self.table.symbols), "prob": self.prob.tolist()}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ConfusionModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(PhonemeInventory(tuple(doc["symbols"])), doc["prob"])


class InsertionCountDist:
    """Distribution over the number of insertions in an alignment.

    Counts for ``N = 0..max_n`` get an additive pseudo-count; beyond
    ``max_n`` one more pseudo-count of mass decays geometrically by half.
    """

    def __init__(self, tallies, max_n=None, eps=0.5):
        tallies = Counter({int(k): int(v) for k, v in dict(tallies).items()})
        seen_max = max(tallies, default=0)
        self.max_n = int(max_n) if max_n is not None else seen_max + 2
        if self.max_n < seen_max:
            raise ValueError("max_n below the largest observed insertion count")
        self.tallies = tallies
        self.eps = eps
        head = [tallies.get(n, 0) + eps for n in range(self.max_n + 1)]
        total = sum(head) + eps
        self._head = [h / total for h in head]
        self.tail_mass = eps / total

    def p(self, n: int) -> float:
        if n < 0:
            return 0.0
        if n <= self.max_n:
            return self._head[n]
        return self.tail_mass * 0.5 ** (n - self.max_n)

    def bits(self, n: int) -> float:
        return -math.log2(self.p(n))

    def total_mass(self):
        return math.fsum(self._head) + self.tail_mass

    def mean(self):
        head = sum(n * p for n, p in enumerate(self._head))
        # sum_{k>=1} (max_n + k) * tail * 2^-k = tail * (max_n + 2)
        return head + self.tail_mass * (self.max_n + 2)

    def to_dict(self):
        return {"tallies": {str(k): v for k, v in sorted(self.tallies.items())},
                "max_n": self.max_n, "eps": self.eps}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "InsertionCountDist":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(doc["tallies"], doc["max_n"], doc["eps"])


def _ops_to_alignment(table, a_seq, b_seq, codes, cost) -> Alignment:
    ops = []
    i = j = 0
    for c in codes:
        kind = _KINDS[c]
        if c <= 1:
            ops.append(EditOp(kind, a_seq[i], b_seq[j]))
            i += 1
            j += 1
        elif c == 2:
            ops.append(EditOp(kind, a_seq[i], GAP))
            i += 1
        else:
            ops.append(EditOp(kind, GAP, b_seq[j]))
            j += 1
    return Alignment(tuple(ops), float(cost))


def align_codes(intended, observed, costs: CostModel):
    """Raw op codes and cost; the fast path used while searching."""
    t = costs.table
    a = t.encode(tuple(intended))
    b = t.encode(tuple(observed))
    return _align_kernel(a, b, costs.matrix, t.gap)


def align(intended, observed, costs: CostModel) -> Alignment:
    """Minimum-cost alignment.

    Among equal-cost scripts the traceback prefers, cell by cell from the
    end, a diagonal move (match or substitution), then a deletion, then an
    insertion.
    """
    intended = tuple(intended)
    observed = tuple(observed)
    codes, cost = align_codes(intended, observed, costs)
    return _ops_to_alignment(costs.table, intended, observed, codes, cost)


def _tally(pairs, costs: CostModel):
    k = len(costs.inventory) + 1
    counts = np.zeros((k, k))
    scripts = []
    for intended, observed in pairs:
        intended, observed = tuple(intended), tuple(observed)
        codes, _ = align_codes(intended, observed, costs)
        scripts.append(codes.tobytes())
        t = costs.table
        i = j = 0
        for c in codes:
            if c <= 1:
                counts[t.idx(intended[i]), t.idx(observed[j])] += 1
                i += 1
                j += 1
            elif c == 2:
                counts[t.idx(intended[i]), t.gap] += 1
                i += 1
            else:
                counts[t.gap, t.idx(observed[j])] += 1
                j += 1
    return counts, scripts


def estimate_confusions(pairs, costs: CostModel, eps=0.5) -> ConfusionModel:
    """Align every pair, tally co-occurrences, smooth and normalize rows."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one (intended, observed) pair")
    counts, _ = _tally(pairs, costs)
    return ConfusionModel.from_counts(costs.inventory, counts, eps)


def costs_from_confusions(conf: ConfusionModel) -> CostModel:
    """Costs in bits, relative to coding an exact match.

    Each intended symbol is touched by exactly one match, substitution or
    deletion, so subtracting the match cost leaves the ranking of
    alignments by substitution code unchanged while keeping matches free.
    """
    bits = conf.bits.copy()
    g = conf.table.gap
    match = np.diag(bits)[:g]
    rel = bits.copy()
    rel[:g, :] = bits[:g, :] - match[:, None]
    rel[g, g] = 0.0
    np.clip(rel, 0.0, None, out=rel)
    return CostModel(conf.inventory, rel)


def estimate_costs(pairs, inventory: PhonemeInventory, groups: BroadGroupMap | None = None,
                   max_iter=10, eps=0.5):
    """Iteratively re-estimate alignment costs from training pairs.

    Starts from :meth:`CostModel.phonetic`, then alternates aligning all
    pairs and refitting costs from the smoothed confusion table, stopping
    once no alignment changes or after ``max_iter`` rounds.

    Returns
    -------
    CostModel
        The final costs.  ``.iterations`` records how many rounds ran and
        ``.converged`` whether the alignments reached a fixpoint.
    """
    pairs = [(tuple(a), tuple(b)) for a, b in pairs]
    if not pairs:
        raise ValueError("need at least one (intended, observed) pair")
    costs = CostModel.phonetic(inventory, groups)
    counts, prev = _tally(pairs, costs)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        costs = costs_from_confusions(ConfusionModel.from_counts(inventory, counts, eps))
        counts, scripts = _tally(pairs, costs)
        if scripts == prev:
            converged = True
            break
        prev = scripts
    costs.iterations = it
    costs.converged = converged
    return costs


def estimate_insertion_dist(db, costs: CostModel, folds=10, seed=0, max_n=None):
    """Rotating hold-out estimate of P(N insertions).

    ``db`` is an iterable of ``(word, phonemes)`` observations (one per
    training token, e.g. ``Lexicon.tokens()``).  The observations are
    shuffled with ``seed`` and cut into ``folds`` contiguous folds; each held
    out observation is aligned (as the observed side) against every distinct
    realization of the same word left in the other folds, and the insertion
    count of the cheapest alignment is tallied.
    """
    db = [(w, tuple(p)) for w, p in db]
    by_word = Counter(w for w, _ in db)
    if not any(c >= 2 for c in by_word.values()):
        raise InsufficientData("no word has two or more realizations")
    order = list(range(len(db)))
    random.Random(seed).shuffle(order)
    bounds = [round(f * len(order) / folds) for f in range(folds + 1)]
    tallies = Counter()
    cache = {}
    for f in range(folds):
        held = order[bounds[f]:bounds[f + 1]]
        if not held:
            continue
        held_set = set(held)
        remaining = {}
        for idx in order:
            if idx not in held_set:
                w, p = db[idx]
                remaining.setdefault(w, {})[p] = None
        for idx in held:
            w, observed = db[idx]
            refs = remaining.get(w)
            if not refs:
                continue
            best = None
            for intended in refs:
                key = (intended, observed)
                hit = cache.get(key)
                if hit is None:
                    codes, cost = align_codes(intended, observed, costs)
                    hit = (float(cost), int((codes == INSERT).sum()))
                    cache[key] = hit
                if best is None or hit[0] < best[0] - _TIE_TOL:
                    best = hit
            tallies[best[1]] += 1
    return InsertionCountDist(tallies, max_n)
