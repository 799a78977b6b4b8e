"""Pronunciation lexicon with frequency-weighted realizations.

File format (UTF-8, line oriented, lines starting with ``#`` are comments)::

    another|nn|ax n ah dh axr
    another> ix n ah dh axr 3

Realization lines may reference any word declared in the same file.  A word
that has no realization lines is seeded with its canonical form (count 1)
so it can always be decoded; the first trained realization replaces the
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateRealization, EmptyEntry, ParseError, UnknownWord
from .phonemes import GAP, PhonemeInventory, content_lines

EOS_WORD = "eos"
EOS1 = "eos1"
EOS2 = "eos2"
RESERVED = frozenset({EOS_WORD, EOS1, EOS2})


@dataclass
class Realization:
    phonemes: tuple
    freq: int = 1

    def __post_init__(self):
        self.phonemes = tuple(self.phonemes)
        if not self.phonemes:
            raise ValueError("realization must be non-empty")
        if self.freq < 1:
            raise ValueError("realization frequency must be >= 1")


@dataclass
class LexEntry:
    word: str
    pos_tags: tuple
    canonical: tuple
    realizations: list = field(default_factory=list)
    seeded: bool = False

    def __post_init__(self):
        self.pos_tags = tuple(self.pos_tags)
        self.canonical = tuple(self.canonical)
        if not self.realizations:
            self.realizations = [Realization(self.canonical, 1)]
            self.seeded = True

    @property
    def total_freq(self) -> int:
        return sum(r.freq for r in self.realizations)

    def find(self, seq) -> int:
        seq = tuple(seq)
        for j, r in enumerate(self.realizations):
            if r.phonemes == seq:
                return j
        return -1


class Lexicon:
    """Mapping word -> :class:`LexEntry`."""

    def __init__(self, entries: Iterable[LexEntry] = ()):
        self.entries: dict = {}
        for e in entries:
            self.add_entry(e)

    def __contains__(self, word):
        return word in self.entries

    def __getitem__(self, word) -> LexEntry:
        try:
            return self.entries[word]
        except KeyError:
            raise UnknownWord(word) from None

    def __iter__(self) -> Iterator[LexEntry]:
        return iter(self.entries.values())

    def __len__(self):
        return len(self.entries)

    def words(self):
        return list(self.entries)

    @property
    def tagset(self):
        return sorted({t for e in self for t in e.pos_tags})

    def pairs(self):
        """All (word, tag) pairings the lexicon allows."""
        return [(e.word, t) for e in self for t in e.pos_tags]

    @property
    def realization_count(self):
        return sum(len(e.realizations) for e in self)

    def add_entry(self, entry: LexEntry):
        if entry.word in RESERVED:
            raise ValueError(f"{entry.word!r} is a reserved word")
        if not entry.pos_tags or not entry.canonical:
            raise EmptyEntry(entry.word)
        for t in entry.pos_tags:
            if t in RESERVED:
                raise ValueError(f"{t!r} is a reserved tag")
        if entry.word in self.entries:
            raise DuplicateRealization(entry.word)
        self.entries[entry.word] = entry

    def add_realization(self, word, seq, count=1) -> "Lexicon":
        entry = self[word]
        seq = tuple(seq)
        if entry.seeded:
            entry.realizations = []
            entry.seeded = False
        j = entry.find(seq)
        if j >= 0:
            entry.realizations[j].freq += count
        else:
            entry.realizations.append(Realization(seq, count))
        return self

    def validate(self, inventory: PhonemeInventory):
        for e in self:
            for r in [Realization(e.canonical)] + e.realizations:
                for p in r.phonemes:
                    if p not in inventory:
                        raise ParseError(0, f"word {e.word!r}: unknown phoneme {p!r}")

    def tokens(self):
        """Yield (word, phonemes) once per training observation."""
        for e in self:
            for r in e.realizations:
                for _ in range(r.freq):
                    yield e.word, r.phonemes

    def dumps(self) -> str:
        lines = []
        for word in sorted(self.entries):
            e = self.entries[word]
            lines.append(f"{word}|{','.join(e.pos_tags)}|{' '.join(e.canonical)}")
            if not e.seeded:
                for r in e.realizations:
                    lines.append(f"{word}> {' '.join(r.phonemes)} {r.freq}")
        return "".join(ln + "\n" for ln in lines)

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")


def words_by_length(lex: Lexicon, min_ph, max_ph=math.inf):
    if not 0 < min_ph <= max_ph:
        raise ValueError("need 0 < min_ph <= max_ph")
    return [
        e.word
        for e in lex
        if any(min_ph <= len(r.phonemes) <= max_ph for r in e.realizations)
    ]


def add_realization(lex: Lexicon, word, seq) -> Lexicon:
    return lex.add_realization(word, seq)


def _parse_realization_line(line, lineno, path):
    head, _, rest = line.partition(">")
    word = head.strip()
    toks = rest.split()
    count = 1
    if toks and toks[-1].isdigit():
        count = int(toks.pop())
        if count < 1:
            raise ParseError(lineno, "count must be >= 1", path)
    if not word or not toks:
        raise ParseError(lineno, "empty realization", path)
    if GAP in toks:
        raise ParseError(lineno, "gap symbol in realization", path)
    return word, tuple(toks), count


def parse_lexicon(text: str, path=None, inventory: PhonemeInventory | None = None) -> Lexicon:
    lex = Lexicon()
    pending = []
    for lineno, line in content_lines(text):
        if "|" in line:
            parts = line.split("|")
            if len(parts) != 3:
                raise ParseError(lineno, "expected word|tags|phonemes", path)
            word = parts[0].strip()
            tags = tuple(t.strip() for t in parts[1].split(",") if t.strip())
            canon = tuple(parts[2].split())
            if not word:
                raise ParseError(lineno, "missing word", path)
            if not tags or not canon:
                raise EmptyEntry(word)
            try:
                lex.add_entry(LexEntry(word, tags, canon))
            except ValueError as exc:
                raise ParseError(lineno, str(exc), path) from None
        elif ">" in line:
            pending.append((lineno,) + _parse_realization_line(line, lineno, path))
        else:
            raise ParseError(lineno, "unrecognised line", path)
    for lineno, word, seq, count in pending:
        if word not in lex:
            raise ParseError(lineno, f"realization for undeclared word {word!r}", path)
        lex.add_realization(word, seq, count)
    if inventory is not None:
        lex.validate(inventory)
    return lex


def load_lexicon(path, inventory: PhonemeInventory | None = None) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"), str(path), inventory)


def load_realizations(path):
    """Read a realization corpus: ``word> ph ph ph [count]`` lines."""
    out = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in content_lines(text):
        if ">" not in line:
            raise ParseError(lineno, "expected 'word> phonemes [count]'", str(path))
        out.append(_parse_realization_line(line, lineno, str(path)))
    return out
