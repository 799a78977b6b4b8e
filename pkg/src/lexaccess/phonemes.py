"""Phoneme inventory, phoneme sequences and broad sound groups.

A phoneme sequence is a plain tuple of symbol strings.  The gap symbol
``"-"`` is reserved for alignments and never belongs to an inventory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ParseError, UnknownPhoneme

GAP = "-"

PhonemeSeq = tuple  # tuple[str, ...]
BroadGroupSeq = tuple


def content_lines(text):
    """Yield ``(lineno, stripped line)`` skipping blanks and ``#`` comment lines."""
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


@dataclass(frozen=True)
class PhonemeInventory:
    symbols: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        symbols = tuple(self.symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("inventory symbols must be unique")
        for s in symbols:
            if not s or s == GAP or any(c.isspace() for c in s):
                raise ValueError(f"invalid inventory symbol {s!r}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    def __contains__(self, symbol):
        return symbol in self._index

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def index(self, symbol):
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownPhoneme(symbol) from None

    @classmethod
    def from_file(cls, path) -> "PhonemeInventory":
        symbols = []
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in content_lines(text):
            if len(line.split()) != 1:
                raise ParseError(lineno, "expected one symbol per line", path)
            symbols.append(line)
        return cls(tuple(symbols))

    def save(self, path):
        Path(path).write_text("".join(s + "\n" for s in self.symbols), encoding="utf-8")


@dataclass(frozen=True)
class BroadGroupMap:
    mapping: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "mapping", dict(self.mapping))

    @property
    def groups(self):
        return tuple(sorted(set(self.mapping.values())))

    def __getitem__(self, symbol):
        return self.mapping[symbol]

    def covers(self, inventory: PhonemeInventory) -> bool:
        return all(s in self.mapping for s in inventory)

    @classmethod
    def from_file(cls, path) -> "BroadGroupMap":
        return cls(_parse_groups(Path(path).read_text(encoding="utf-8"), path))

    def save(self, path):
        lines = [f"{s} {g}\n" for s, g in self.mapping.items()]
        Path(path).write_text("".join(lines), encoding="utf-8")


def _parse_groups(text, path=None):
    mapping = {}
    for lineno, line in content_lines(text):
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(lineno, "expected '<symbol> <group>'", path)
        symbol, group = parts
        if symbol in mapping:
            raise ParseError(lineno, f"symbol {symbol!r} listed twice", path)
        mapping[symbol] = group
    return mapping


def _data_text(name):
    return resources.files("lexaccess").joinpath("data").joinpath(name).read_text(encoding="utf-8")


def default_inventory() -> PhonemeInventory:
    """The 61-symbol TIMIT ARPAbet inventory shipped with the package."""
    symbols = [ln.strip() for ln in _data_text("timit.inventory").splitlines() if ln.strip()]
    return PhonemeInventory(tuple(symbols))


def default_broad_groups() -> BroadGroupMap:
    """Seven-group table: vowel, stop, fricative, affricate, nasal,
    liquid-glide, silence.  ``dh`` is a fricative here; swap the table via
    :meth:`BroadGroupMap.from_file` to use a different grouping."""
    return BroadGroupMap(_parse_groups(_data_text("timit.groups")))


def parse_phoneme_seq(text: str, inv: PhonemeInventory) -> PhonemeSeq:
    """Split whitespace-separated symbols and validate each against ``inv``."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty phoneme sequence")
    for pos, tok in enumerate(tokens):
        if tok not in inv:
            raise UnknownPhoneme(tok, pos)
    return tuple(tokens)


def format_phoneme_seq(seq: Sequence[str]) -> str:
    return " ".join(seq)


def to_broad_groups(seq: Iterable[str], groups: BroadGroupMap) -> BroadGroupSeq:
    out = []
    for pos, s in enumerate(seq):
        try:
            out.append(groups.mapping[s])
        except KeyError:
            raise UnknownPhoneme(s, pos) from None
    return tuple(out)
