"""Run configuration: a ``key = value`` file with command-line overrides.

Example::

    # paths are relative to this file
    lexicon = lexicon.txt
    tagged_corpus = train.tagged
    realizations = realizations.txt
    model_dir = model
    beam_bits = 30
    max_beam = 100
    shortlist = true
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InvalidArgs, ParseError
from .phonemes import content_lines
from .search import SearchConfig

ESCAPE_SCHEMES = ("witten-bell-c",)
PATH_KEYS = ("inventory", "groups", "lexicon", "tagged_corpus", "realizations", "pairs",
             "model_dir", "grammar")


def _bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text):
    v = text.strip().lower()
    return None if v in ("none", "inf", "") else int(v)


@dataclass
class Config:
    inventory: Path | None = None
    groups: Path | None = None
    lexicon: Path | None = None
    tagged_corpus: Path | None = None
    realizations: Path | None = None
    pairs: Path | None = None
    model_dir: Path | None = None
    grammar: Path | None = None
    beam_bits: float = 30.0
    max_beam: int | None = 100
    slot_min_ph: int = 1
    slot_max_ph: int = 16
    slot_ratio: float = 2.0
    shortlist: bool = True
    top_k: int = 1
    lm: str = "pos"
    oracle_cap: int = 12
    escape: str = "witten-bell-c"
    seed: int = 0
    k_min: int = 1
    k_max: int = 60
    folds: int = 10

    _PARSERS = {
        "beam_bits": float, "max_beam": _optional_int, "slot_min_ph": int,
        "slot_max_ph": int, "slot_ratio": float, "shortlist": _bool, "top_k": int,
        "lm": str, "oracle_cap": int, "escape": str, "seed": int, "k_min": int,
        "k_max": int, "folds": int,
    }

    def set(self, key, value, base=None):
        """Set ``key`` from its text form (paths resolve against ``base``)."""
        if key in PATH_KEYS:
            p = Path(value)
            if base is not None and not p.is_absolute():
                p = Path(base) / p
            setattr(self, key, p)
        elif key in self._PARSERS:
            try:
                setattr(self, key, self._PARSERS[key](value))
            except ValueError as exc:
                raise InvalidArgs(f"bad value for {key}: {exc}") from None
        else:
            raise InvalidArgs(f"unknown config key {key!r}")

    def update(self, overrides: dict):
        for k, v in overrides.items():
            if v is not None:
                setattr(self, k, v)
        return self

    def validate(self, required=()):
        """Range checks, plus existence of every path named in ``required``."""
        if self.escape not in ESCAPE_SCHEMES:
            raise InvalidArgs(f"unsupported escape scheme {self.escape!r}")
        if self.k_min < 1 or self.k_max < self.k_min:
            raise InvalidArgs("need 1 <= k_min <= k_max")
        if self.folds < 2:
            raise InvalidArgs("folds must be at least 2")
        self.search()
        for key in ("inventory", "groups", "realizations", "pairs"):
            p = getattr(self, key)
            if p is not None and not Path(p).exists():
                raise InvalidArgs(f"{key}: no such file: {p}")
        for key in required:
            p = getattr(self, key)
            if p is None:
                raise InvalidArgs(f"config key {key!r} is required")
            if not Path(p).exists():
                raise InvalidArgs(f"{key}: no such file: {p}")
        return self

    def search(self) -> SearchConfig:
        try:
            return SearchConfig(
                beam_bits=self.beam_bits,
                max_beam=self.max_beam,
                slot_min_ph=self.slot_min_ph,
                slot_max_ph=self.slot_max_ph,
                slot_ratio=self.slot_ratio,
                shortlist_enabled=self.shortlist,
                top_k=self.top_k,
                lm=self.lm,
                oracle_cap=self.oracle_cap,
            )
        except ValueError as exc:
            raise InvalidArgs(str(exc)) from None

    def dumps(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None and f.name in PATH_KEYS:
                continue
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif v is None or (isinstance(v, float) and math.isinf(v)):
                v = "none" if f.name == "max_beam" else "inf"
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


def parse_config(text, base=None, path=None) -> Config:
    cfg = Config()
    for lineno, line in content_lines(text):
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(lineno, "expected key = value", path)
        try:
            cfg.set(key.strip(), value.strip(), base)
        except InvalidArgs as exc:
            raise ParseError(lineno, str(exc), path) from None
    return cfg


def load_config(path) -> Config:
    p = Path(path)
    if not p.exists():
        raise InvalidArgs(f"config: no such file: {p}")
    return parse_config(p.read_text(encoding="utf-8"), p.parent, str(p))
