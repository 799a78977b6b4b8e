"""Equivalence classes of realizations over broad-sound-group sequences.

Every trained realization is rewritten as its broad-group sequence and the
distinct sequences are clustered by k-medoids under unit-cost edit
distance.  The number of classes is picked by a two-part message length:
bits to state each class centroid and each realization's class, plus bits
to spell out every realization as edits from its centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .lexicon import Lexicon
from .phonemes import BroadGroupMap, content_lines, to_broad_groups
from .errors import ParseError


@numba.njit(cache=True)
def _levenshtein(a, b):
    n = a.shape[0]
    m = b.shape[0]
    prev = np.arange(m + 1)
    cur = np.empty(m + 1, dtype=np.int64)
    for i in range(1, n + 1):
        cur[0] = i
        for j in range(1, m + 1):
            c = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 1)
            d = prev[j] + 1
            if d < c:
                c = d
            d = cur[j - 1] + 1
            if d < c:
                c = d
            cur[j] = c
        prev, cur = cur, prev
    return prev[m]


@numba.njit(cache=True)
def _distance_matrix(flat, offsets):
    u = offsets.shape[0] - 1
    out = np.zeros((u, u), dtype=np.int64)
    for i in range(u):
        a = flat[offsets[i]:offsets[i + 1]]
        for j in range(i + 1, u):
            d = _levenshtein(a, flat[offsets[j]:offsets[j + 1]])
            out[i, j] = d
            out[j, i] = d
    return out


@numba.njit(cache=True)
def _nearest(flat, offsets, seq):
    """Index of the centroid closest to ``seq``; ties to the lowest index."""
    best = -1
    best_d = 0
    for c in range(offsets.shape[0] - 1):
        d = _levenshtein(seq, flat[offsets[c]:offsets[c + 1]])
        if best < 0 or d < best_d:
            best = c
            best_d = d
    return best


def group_distance(x, y) -> int:
    """Unit-cost edit distance between two label sequences."""
    labels = {s: i for i, s in enumerate(sorted(set(x) | set(y)))}
    a = np.array([labels[s] for s in x], dtype=np.int64)
    b = np.array([labels[s] for s in y], dtype=np.int64)
    return int(_levenshtein(a, b))


@dataclass
class EquivalenceClass:
    id: int
    centroid: tuple
    members: list = field(default_factory=list)  # [(word, realization index)]

    def words(self):
        seen = {}
        for w, _ in self.members:
            seen.setdefault(w, None)
        return list(seen)


@dataclass
class ClassModel:
    classes: list
    groups: tuple  # broad-group label alphabet
    score_bits: float = 0.0
    scores: dict = field(default_factory=dict)  # k -> bits, for every k tried

    @property
    def k(self):
        return len(self.classes)

    def centroid_index(self):
        """Label table and flattened centroids for the nearest-centroid kernel."""
        idx = getattr(self, "_centroid_index", None)
        if idx is None:
            ordered = sorted(self.classes, key=lambda c: c.id)
            labels = {g: i for i, g in enumerate(self.groups)}
            for c in ordered:
                for g in c.centroid:
                    labels.setdefault(g, len(labels))
            flat = np.array([labels[g] for c in ordered for g in c.centroid], dtype=np.int64)
            offsets = np.zeros(len(ordered) + 1, dtype=np.int64)
            offsets[1:] = np.cumsum([len(c.centroid) for c in ordered])
            idx = (labels, flat, offsets, [c.id for c in ordered])
            self._centroid_index = idx
        return idx

    def member_count(self):
        return sum(len(c.members) for c in self.classes)

    def dumps(self) -> str:
        lines = [f"k {self.k}", f"groups {' '.join(self.groups)}"]
        for c in self.classes:
            lines.append("")
            lines.append(f"class {c.id}")
            lines.append(f"centroid {' '.join(c.centroid)}")
            for w, j in c.members:
                lines.append(f"member {w} {j}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text, path=None) -> "ClassModel":
        classes = []
        groups = ()
        for lineno, line in content_lines(text):
            head, _, rest = line.partition(" ")
            if head == "k":
                continue
            if head == "groups":
                groups = tuple(rest.split())
            elif head == "class":
                classes.append(EquivalenceClass(int(rest), ()))
            elif head == "centroid" and classes:
                classes[-1].centroid = tuple(rest.split())
            elif head == "member" and classes:
                w, j = rest.split()
                classes[-1].members.append((w, int(j)))
            else:
                raise ParseError(lineno, f"unexpected line {line!r}", path)
        return cls(classes, groups)

    @classmethod
    def load(cls, path) -> "ClassModel":
        return cls.loads(Path(path).read_text(encoding="utf-8"), str(path))


def _build_order(dist, weights, k_max):
    """Greedy BUILD: medoids in the order they are added."""
    wd = dist * weights[None, :]
    order = [int(np.argmin(wd.sum(axis=1)))]
    nearest = dist[order[0]].astype(np.float64)
    while len(order) < k_max:
        gain = (np.maximum(nearest[None, :] - dist, 0) * weights[None, :]).sum(axis=1)
        gain[order] = -1
        nxt = int(np.argmax(gain))
        order.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    return order


def _kmedoids(dist, weights, init, max_iter=100):
    """Alternate nearest-medoid assignment and per-cluster medoid update."""
    medoids = sorted(init)
    for _ in range(max_iter):
        assign = np.argmin(dist[medoids], axis=0)
        new = []
        for c in range(len(medoids)):
            idx = np.flatnonzero(assign == c)
            if idx.size == 0:
                new.append(medoids[c])
                continue
            within = (dist[np.ix_(idx, idx)] * weights[idx][None, :]).sum(axis=1)
            new.append(int(idx[np.argmin(within)]))
        new = sorted(set(new))
        if new == medoids:
            break
        medoids = new
    return medoids, np.argmin(dist[medoids], axis=0)


def _score(seqs, lengths, dist, weights, medoids, assign, n_groups):
    """Two-part message length of a clustering, in bits."""
    total_w = weights.sum()
    bits = 0.0
    for c, m in enumerate(medoids):
        bits += (lengths[m] + 1) * math.log2(n_groups + 1)
        wc = weights[assign == c].sum()
        if wc > 0:
            bits -= wc * math.log2(wc / total_w)
    e = dist[np.asarray(medoids)[assign], np.arange(len(seqs))]
    total_ops = float((e * weights).sum())
    theta = total_ops / (total_ops + total_w)
    for i in range(len(seqs)):
        ei = int(e[i])
        p = (1 - theta) * theta ** ei if theta > 0 else (1.0 if ei == 0 else 0.0)
        per_op = math.log2(3 * n_groups * (lengths[medoids[assign[i]]] + 1))
        bits += weights[i] * (-math.log2(p) + ei * per_op)
    return bits


def build_classes(lex: Lexicon, groups: BroadGroupMap, k_range=(1, 60), seed=0) -> ClassModel:
    """Cluster every realization's broad-group sequence; choose k in
    ``k_range`` (inclusive) by the smallest two-part score.  The result
    does not depend on ``seed``: initialization is deterministic."""
    members = {}
    for e in lex:
        for j, r in enumerate(e.realizations):
            members.setdefault(to_broad_groups(r.phonemes, groups), []).append((e.word, j))
    if not members:
        raise ValueError("lexicon has no realizations")
    seqs = sorted(members)
    labels = {g: i for i, g in enumerate(groups.groups)}
    for s in seqs:
        for g in s:
            labels.setdefault(g, len(labels))
    flat = np.array([labels[g] for s in seqs for g in s], dtype=np.int64)
    offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(s) for s in seqs])
    dist = _distance_matrix(flat, offsets)
    weights = np.array([len(members[s]) for s in seqs], dtype=np.float64)
    lengths = [len(s) for s in seqs]
    n_groups = max(len(labels), 1)

    k_lo, k_hi = k_range
    k_hi = min(k_hi, len(seqs))
    k_lo = max(1, min(k_lo, k_hi))
    best = None
    scores = {}
    order = _build_order(dist, weights, k_hi)
    for k in range(k_lo, k_hi + 1):
        medoids, assign = _kmedoids(dist, weights, order[:k])
        bits = _score(seqs, lengths, dist, weights, medoids, assign, n_groups)
        scores[k] = bits
        if best is None or bits < best[0]:
            best = (bits, medoids, assign)
    bits, medoids, assign = best
    classes = [EquivalenceClass(c, seqs[m]) for c, m in enumerate(medoids)]
    for i, s in enumerate(seqs):
        classes[int(assign[i])].members.extend(members[s])
    for c in classes:
        c.members.sort()
    return ClassModel(classes, tuple(sorted(labels, key=labels.get)), bits, scores)


def classify(seq, model: ClassModel, groups: BroadGroupMap) -> int:
    """Id of the class whose centroid is nearest (fewest edits); ties to the lowest id."""
    labels, flat, offsets, ids = model.centroid_index()
    # Groups absent from every centroid never match, so one shared unseen
    # label is enough.
    unseen = len(labels)
    g = np.array([labels.get(x, unseen) for x in to_broad_groups(seq, groups)],
                 dtype=np.int64)
    return ids[_nearest(flat, offsets, g)]


def candidates(seq, model: ClassModel | None, lex: Lexicon, groups: BroadGroupMap | None = None):
    """Short-listed words for a segment; the whole lexicon when ``model`` is None."""
    if model is None:
        return lex.words()
    cid = classify(seq, model, groups)
    return next(c for c in model.classes if c.id == cid).words()
