"""Back-off n-gram code lengths for part-of-speech tags and words.

Every context keeps a table of successor counts.  Coding a symbol starts
at the longest context; when the symbol was never seen there an escape is
coded and the next shorter context takes over.  Escape probability follows
Witten and Bell's distinct-symbol rule: with ``n`` observations and ``d``
distinct successors, a seen symbol ``s`` gets ``c(s) / (n + d)`` and the
escape gets ``d / (n + d)``.  Symbols already offered by a longer context
are excluded from the shorter ones, so each backed-off distribution sums
to one exactly.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InvalidPairing, ParseError, UnknownTag, UnknownWord
from .lexicon import EOS1, EOS2, EOS_WORD, Lexicon

FORMAT_VERSION = 1


def backoff_bits(levels: Sequence, symbol, alphabet_size: int) -> float:
    """Code length in bits of ``symbol`` under an escape-coded back-off chain.

    Parameters
    ----------
    levels : sequence of mapping or None
        Successor counts per context, longest context first.  ``None`` or an
        empty mapping marks a context never seen in training; escaping from
        it is free.
    symbol : hashable
        The symbol to code.  It must belong to the alphabet.
    alphabet_size : int
        Number of symbols the final uniform fallback ranges over.
    """
    excluded = set()
    bits = 0.0
    for counts in levels:
        if not counts:
            continue
        if excluded:
            live = {s: c for s, c in counts.items() if s not in excluded}
        else:
            live = counts
        n = sum(live.values())
        if n == 0:
            continue
        d = len(live)
        unseen_left = alphabet_size - len(excluded) - d
        if symbol in live:
            esc = d if unseen_left > 0 else 0
            return bits - math.log2(live[symbol] / (n + esc))
        if unseen_left <= 0:
            raise KeyError(symbol)
        bits -= math.log2(d / (n + d))
        excluded.update(live)
    remaining = alphabet_size - len(excluded)
    if remaining <= 0:
        raise KeyError(symbol)
    return bits + math.log2(remaining)


def backoff_distribution(levels: Sequence, alphabet: Iterable) -> dict:
    """Full probability table implied by :func:`backoff_bits` (for checks)."""
    alphabet = list(alphabet)
    return {s: 2.0 ** -backoff_bits(levels, s, len(alphabet)) for s in alphabet}


def _pad_tags(tags):
    return [EOS2, EOS1] + list(tags)


@dataclass
class PosTrigramModel:
    tagset: tuple
    trigrams: dict = field(default_factory=dict)  # (t2, t1) -> Counter
    bigrams: dict = field(default_factory=dict)  # t1 -> Counter
    unigrams: Counter = field(default_factory=Counter)

    def __post_init__(self):
        self.tagset = tuple(self.tagset)
        self._tags = frozenset(self.tagset)
        self._cache = {}

    @property
    def trigram_counts(self):
        return {(x, y, z): c for (x, y), cnt in self.trigrams.items() for z, c in cnt.items()}

    @property
    def bigram_counts(self):
        return {(y, z): c for y, cnt in self.bigrams.items() for z, c in cnt.items()}

    def levels(self, ctx):
        t2, t1 = ctx
        return [self.trigrams.get((t2, t1)), self.bigrams.get(t1), self.unigrams]

    def observe(self, tags):
        padded = _pad_tags(tags)
        for i in range(2, len(padded)):
            t2, t1, t = padded[i - 2], padded[i - 1], padded[i]
            if t not in self._tags:
                raise UnknownTag(t)
            self.trigrams.setdefault((t2, t1), Counter())[t] += 1
            self.bigrams.setdefault(t1, Counter())[t] += 1
            self.unigrams[t] += 1
        self._cache.clear()

    def code_length(self, ctx, tag) -> float:
        key = (ctx[0], ctx[1], tag)
        bits = self._cache.get(key)
        if bits is None:
            if tag not in self._tags:
                raise UnknownTag(tag)
            bits = backoff_bits(self.levels(ctx), tag, len(self.tagset))
            self._cache[key] = bits
        return bits

    def contexts(self):
        return list(self.trigrams)


@dataclass
class WordBigramModel:
    """P(word | tag, previous word), backing off to P(word | tag)."""

    bigrams: dict = field(default_factory=dict)  # (prev_word, tag) -> Counter
    unigrams: dict = field(default_factory=dict)  # tag -> Counter, lexicon floor included

    def __post_init__(self):
        self._cache = {}

    @property
    def bigram_counts(self):
        return {(p, w, t): c for (p, t), cnt in self.bigrams.items() for w, c in cnt.items()}

    @property
    def unigram_counts(self):
        return {(w, t): c for t, cnt in self.unigrams.items() for w, c in cnt.items()}

    def add_floor(self, pairs):
        for w, t in pairs:
            self.unigrams.setdefault(t, Counter())[w] += 1
        self._cache.clear()

    def observe(self, tagged):
        prev = EOS_WORD
        for w, t in tagged:
            self.bigrams.setdefault((prev, t), Counter())[w] += 1
            self.unigrams.setdefault(t, Counter())[w] += 1
            prev = w
        self._cache.clear()

    def levels(self, prev_word, tag):
        return [self.bigrams.get((prev_word, tag)), self.unigrams.get(tag)]

    def code_length(self, prev_word, tag, word) -> float:
        key = (prev_word, tag, word)
        bits = self._cache.get(key)
        if bits is None:
            uni = self.unigrams.get(tag)
            if not uni or word not in uni:
                raise InvalidPairing(word, tag)
            bits = backoff_bits(self.levels(prev_word, tag), word, len(uni))
            self._cache[key] = bits
        return bits


@dataclass
class WordOnlyModel:
    """Word bigrams without tags, P(word | previous word)."""

    bigrams: dict = field(default_factory=dict)  # prev_word -> Counter
    unigrams: Counter = field(default_factory=Counter)

    def __post_init__(self):
        self._cache = {}

    def add_floor(self, words):
        for w in words:
            self.unigrams[w] += 1
        self._cache.clear()

    def observe(self, words):
        prev = EOS_WORD
        for w in words:
            self.bigrams.setdefault(prev, Counter())[w] += 1
            self.unigrams[w] += 1
            prev = w
        self._cache.clear()

    def levels(self, prev_word):
        return [self.bigrams.get(prev_word), self.unigrams]

    def code_length(self, prev_word, word) -> float:
        key = (prev_word, word)
        bits = self._cache.get(key)
        if bits is None:
            if word not in self.unigrams:
                raise UnknownWord(word)
            bits = backoff_bits(self.levels(prev_word), word, len(self.unigrams))
            self._cache[key] = bits
        return bits


def train_from_tagged_corpus(corpus, lexicon: Lexicon | None = None, tagset=None):
    """Count PoS trigrams and word-given-tag bigrams.

    Each sentence is read as if preceded by the tags ``eos2 eos1`` and the
    word ``eos``.  Returns ``(PosTrigramModel, WordBigramModel)``.
    """
    if tagset is None:
        if lexicon is not None:
            tagset = lexicon.tagset
        else:
            tagset = sorted({t for sent in corpus for _, t in sent})
    pos = PosTrigramModel(tuple(tagset))
    words = WordBigramModel()
    if lexicon is not None:
        words.add_floor(lexicon.pairs())
    for sent in corpus:
        if not sent:
            raise ValueError("empty sentence in tagged corpus")
        pos.observe([t for _, t in sent])
        words.observe(sent)
    return pos, words


def train_word_only(corpus, lexicon: Lexicon | None = None) -> WordOnlyModel:
    m = WordOnlyModel()
    if lexicon is not None:
        m.add_floor(lexicon.words())
    for sent in corpus:
        m.observe([w for w, _ in sent])
    return m


def pos_code_length(m: PosTrigramModel, ctx, tag) -> float:
    return m.code_length(ctx, tag)


def word_code_length(m: WordBigramModel, prev_word, tag, word) -> float:
    return m.code_length(prev_word, tag, word)


def lm_factors(tagged_sentence):
    """Conditioning structure of each factor, in coding order.

    Yields ``("word", w, (tag, prev_word))`` then ``("pos", tag, (t1, t2))``
    per position, where ``t1`` is the previous tag and ``t2`` the one before.
    """
    t2, t1, prev = EOS2, EOS1, EOS_WORD
    out = []
    for w, t in tagged_sentence:
        out.append(("word", w, (t, prev)))
        out.append(("pos", t, (t1, t2)))
        t2, t1, prev = t1, t, w
    return out


def sentence_lm_bits(m_pos, m_word, tagged_sentence):
    """Per-position ``(pos_bits, word_bits)`` pairs."""
    t2, t1, prev = EOS2, EOS1, EOS_WORD
    out = []
    for w, t in tagged_sentence:
        out.append((m_pos.code_length((t2, t1), t), m_word.code_length(prev, t, w)))
        t2, t1, prev = t1, t, w
    return out


def sentence_lm_code_length(m_pos, m_word, tagged_sentence) -> float:
    if not tagged_sentence:
        raise ValueError("empty sentence")
    return sum(p + w for p, w in sentence_lm_bits(m_pos, m_word, tagged_sentence))


def word_only_code_length(m: WordOnlyModel, sentence) -> float:
    prev = EOS_WORD
    total = 0.0
    for item in sentence:
        w = item[0] if isinstance(item, tuple) else item
        total += m.code_length(prev, w)
        prev = w
    return total


# -- serialization ---------------------------------------------------------

@dataclass
class LanguageModels:
    pos: PosTrigramModel
    words: WordBigramModel
    word_only: WordOnlyModel

    def dumps(self) -> str:
        doc = {
            "version": FORMAT_VERSION,
            "tagset": list(self.pos.tagset),
            "pos_trigrams": sorted([list(k) + [c] for k, c in self.pos.trigram_counts.items()]),
            "pos_bigrams": sorted([list(k) + [c] for k, c in self.pos.bigram_counts.items()]),
            "pos_unigrams": sorted([[k, c] for k, c in self.pos.unigrams.items()]),
            "word_bigrams": sorted([list(k) + [c] for k, c in self.words.bigram_counts.items()]),
            "word_unigrams": sorted([list(k) + [c] for k, c in self.words.unigram_counts.items()]),
            "wo_bigrams": sorted(
                [[p, w, c] for p, cnt in self.word_only.bigrams.items() for w, c in cnt.items()]
            ),
            "wo_unigrams": sorted([[w, c] for w, c in self.word_only.unigrams.items()]),
        }
        return json.dumps(doc, indent=0, sort_keys=True) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text) -> "LanguageModels":
        doc = json.loads(text)
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported language model version {doc.get('version')!r}")
        pos = PosTrigramModel(tuple(doc["tagset"]))
        for x, y, z, c in doc["pos_trigrams"]:
            pos.trigrams.setdefault((x, y), Counter())[z] = c
        for y, z, c in doc["pos_bigrams"]:
            pos.bigrams.setdefault(y, Counter())[z] = c
        for z, c in doc["pos_unigrams"]:
            pos.unigrams[z] = c
        words = WordBigramModel()
        for p, w, t, c in doc["word_bigrams"]:
            words.bigrams.setdefault((p, t), Counter())[w] = c
        for w, t, c in doc["word_unigrams"]:
            words.unigrams.setdefault(t, Counter())[w] = c
        wo = WordOnlyModel()
        for p, w, c in doc["wo_bigrams"]:
            wo.bigrams.setdefault(p, Counter())[w] = c
        for w, c in doc["wo_unigrams"]:
            wo.unigrams[w] = c
        return cls(pos, words, wo)

    @classmethod
    def load(cls, path) -> "LanguageModels":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def train_language_models(corpus, lexicon: Lexicon) -> LanguageModels:
    pos, words = train_from_tagged_corpus(corpus, lexicon)
    return LanguageModels(pos, words, train_word_only(corpus, lexicon))


def parse_tagged_corpus(text: str):
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split()
        if not toks:
            continue
        sent = []
        for tok in toks:
            word, sep, tag = tok.rpartition("/")
            if not sep or not word or not tag:
                raise ParseError(lineno, f"bad token {tok!r}, expected word/TAG")
            sent.append((word, tag))
        out.append(sent)
    return out


def load_tagged_corpus(path):
    return parse_tagged_corpus(Path(path).read_text(encoding="utf-8"))
