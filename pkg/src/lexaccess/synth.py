"""Synthetic corpora with known ground truth.

Grammar file::

    dt nn vbd
    dt jj nn vbd rb

    @dt
    the a
    @nn
    cat dog

Template lines (space-separated tags) come first; each ``@tag`` line opens
a block of words for that tag.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .lexicon import LexEntry, Lexicon
from .phonemes import BroadGroupMap, content_lines


@dataclass
class Grammar:
    templates: list  # [tuple of tags]
    words: dict  # tag -> [word, ...]

    def dumps(self):
        lines = [" ".join(t) for t in self.templates]
        for tag, ws in self.words.items():
            lines += ["", f"@{tag}", " ".join(ws)]
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")


def parse_grammar(text, path=None) -> Grammar:
    templates, words = [], {}
    current = None
    for lineno, line in content_lines(text):
        if line.startswith("@"):
            current = line[1:].strip()
            if not current:
                raise ParseError(lineno, "empty tag name", path)
            words.setdefault(current, [])
        elif current is None:
            templates.append(tuple(line.split()))
        else:
            words[current].extend(line.split())
    for t in templates:
        for tag in t:
            if not words.get(tag):
                raise ParseError(0, f"template uses tag {tag!r} with no words", path)
    if not templates:
        raise ParseError(0, "grammar has no templates", path)
    return Grammar(templates, words)


def load_grammar(path) -> Grammar:
    return parse_grammar(Path(path).read_text(encoding="utf-8"), str(path))


def generate_sentences(grammar: Grammar, n, seed=0, rng=None):
    """``n`` tagged sentences: a uniform template, then a uniform word per tag."""
    if not grammar.templates:
        raise ValueError("grammar has no templates")
    rng = rng or random.Random(seed)
    out = []
    for _ in range(n):
        template = rng.choice(grammar.templates)
        out.append([(rng.choice(grammar.words[t]), t) for t in template])
    return out


@dataclass
class CorruptionSpec:
    p_sub: float = 0.0
    p_del: float = 0.0
    p_ins: float = 0.0
    bias: float = 0.0  # chance a substitution stays within the broad group
    seed: int = 0

    def __post_init__(self):
        for name in ("p_sub", "p_del", "p_ins", "bias"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.p_sub + self.p_del > 1.0:
            raise ValueError("p_sub + p_del must not exceed 1")

    @classmethod
    def scaled(cls, rate, seed=0, bias=0.6):
        """Split a total error rate 2:1:1 over substitution, deletion, insertion."""
        return cls(rate / 2, rate / 4, rate / 4, bias, seed)


@dataclass
class CorruptionResult:
    observed: tuple
    ops: list = field(default_factory=list)  # (kind, intended, observed)

    def counts(self):
        c = {"substitute": 0, "delete": 0, "insert": 0}
        for kind, _, _ in self.ops:
            if kind in c:
                c[kind] += 1
        return c


# Symbols used when generating pronunciations and noise.
VOWELS = ("aa", "ae", "ah", "ao", "aw", "ax", "ay", "eh", "er", "ey", "ih", "ix", "iy",
          "ow", "oy", "uh", "uw")
CONSONANTS = ("b", "d", "g", "p", "t", "k", "f", "v", "th", "dh", "s", "z", "sh", "hh",
              "ch", "jh", "m", "n", "ng", "l", "r", "w", "y")
WORKING_SET = VOWELS + CONSONANTS + ("dx",)


def _substitute(symbol, rng, groups: BroadGroupMap | None, bias, pool):
    if groups is not None and bias > 0 and rng.random() < bias and symbol in groups.mapping:
        same = [s for s in pool if s != symbol and groups.mapping.get(s) == groups[symbol]]
        if same:
            return rng.choice(same)
    return rng.choice([s for s in pool if s != symbol])


def corrupt_with_script(seq, spec: CorruptionSpec, rng=None, groups=None, pool=WORKING_SET):
    """Apply per-phoneme deletion/substitution and per-gap insertion.

    The gaps are before each phoneme and after the last one.  Returns the
    observed sequence with the edit script that produced it.
    """
    rng = rng or random.Random(spec.seed)
    out, ops = [], []

    def maybe_insert():
        if spec.p_ins and rng.random() < spec.p_ins:
            s = rng.choice(pool)
            out.append(s)
            ops.append(("insert", "-", s))

    for x in seq:
        maybe_insert()
        u = rng.random()
        if u < spec.p_del:
            ops.append(("delete", x, "-"))
        elif u < spec.p_del + spec.p_sub:
            y = _substitute(x, rng, groups, spec.bias, pool)
            out.append(y)
            ops.append(("substitute", x, y))
        else:
            out.append(x)
            ops.append(("match", x, x))
    maybe_insert()
    return CorruptionResult(tuple(out), ops)


def corrupt(seq, spec: CorruptionSpec, rng=None, groups=None):
    return corrupt_with_script(seq, spec, rng, groups).observed


# -- whole synthetic setups -------------------------------------------------

DEFAULT_TEMPLATES = (
    ("dt", "nn", "vbd"),
    ("dt", "jj", "nn", "vbd", "rb"),
    ("prp", "vbd", "dt", "nn"),
    ("dt", "nn", "vbd", "in", "dt", "nn"),
    ("nnp", "vbz", "rb"),
    ("dt", "jj", "jj", "nn", "vbz"),
    ("prp", "vbz", "in", "nnp"),
    ("nnp", "cc", "nnp", "vbd", "dt", "nn"),
)
# Share of the vocabulary per tag; closed classes stay small.
TAG_SHARE = {"dt": 0.02, "prp": 0.02, "in": 0.03, "cc": 0.01, "nn": 0.30, "jj": 0.18,
             "vbd": 0.16, "vbz": 0.10, "rb": 0.08, "nnp": 0.10}


def _make_pronunciation(rng, n_syll):
    phones = []
    for k in range(n_syll):
        if rng.random() < 0.8 or k > 0:
            phones.append(rng.choice(CONSONANTS))
        phones.append(rng.choice(VOWELS))
        if rng.random() < 0.5:
            phones.append(rng.choice(CONSONANTS))
    return tuple(phones)


_VOWEL_SHIFTS = {"ah": "ax", "ax": "ix", "ih": "ix", "iy": "ix", "eh": "ih", "er": "axr",
                 "uw": "ux", "ae": "eh", "aa": "ao", "ao": "aa", "ow": "ao", "uh": "ax"}


def _variant(rng, canon):
    p = list(canon)
    choice = rng.random()
    vowels = [i for i, s in enumerate(p) if s in _VOWEL_SHIFTS]
    stops = [i for i, s in enumerate(p) if s in ("t", "d") and 0 < i < len(p) - 1]
    if choice < 0.5 and vowels:
        i = rng.choice(vowels)
        p[i] = _VOWEL_SHIFTS[p[i]]
    elif choice < 0.7 and stops:
        p[rng.choice(stops)] = "dx"
    elif len(p) > 3:
        del p[rng.choice([0, len(p) - 1])]
    else:
        i = rng.randrange(len(p))
        p[i] = _VOWEL_SHIFTS.get(p[i], p[i])
    return tuple(p)


@dataclass
class Pronunciations:
    variants: dict  # word -> [(phonemes, weight), ...]

    def sample(self, word, rng):
        vs = self.variants[word]
        seqs, weights = zip(*vs)
        return rng.choices(seqs, weights)[0]


def make_vocabulary(n_words, seed=0, tags=TAG_SHARE, max_variants=3):
    """Random pronounceable vocabulary.

    Returns ``(Lexicon, Pronunciations, words_by_tag)``.  Words are named
    ``<tag><index>`` and every word has one to ``max_variants`` weighted
    pronunciation variants, the first being canonical.
    """
    rng = random.Random(seed)
    counts = {t: max(1, round(share * n_words)) for t, share in tags.items()}
    while sum(counts.values()) > n_words and max(counts.values()) > 1:
        t = max(counts, key=counts.get)
        counts[t] -= 1
    while sum(counts.values()) < n_words:
        counts["nn"] += 1
    lex = Lexicon()
    variants = {}
    by_tag = {}
    used = set()
    for tag, k in counts.items():
        for i in range(k):
            word = f"{tag}{i:03d}"
            while True:
                short = tag in ("dt", "prp", "in", "cc")
                canon = _make_pronunciation(rng, 1 if short else rng.choice((1, 2, 2, 3)))
                if len(canon) >= 2 and canon not in used:
                    break
            used.add(canon)
            lex.add_entry(LexEntry(word, (tag,), canon))
            vs = [(canon, 6)]
            for w in (3, 1)[: rng.randrange(max_variants)]:
                v = _variant(rng, canon)
                if v and all(v != s for s, _ in vs):
                    vs.append((v, w))
            variants[word] = vs
            by_tag.setdefault(tag, []).append(word)
    return lex, Pronunciations(variants), by_tag


@dataclass
class TestItem:
    sentence_id: str
    tagged: list  # [(word, tag)]
    observed: tuple
    boundaries: list  # [(start, end)] per reference word in ``observed``
    rate: float


@dataclass
class SyntheticData:
    grammar: Grammar
    lexicon: Lexicon
    train: list  # tagged sentences
    realizations: list  # (word, phonemes, count)
    pairs: list  # (intended, observed)
    test: list  # [TestItem]


def corrupt_sentence(tagged, prons: Pronunciations, spec: CorruptionSpec, rng, groups=None):
    """Sample a realization per word, corrupt each word, concatenate."""
    observed, bounds = [], []
    for w, _ in tagged:
        intended = prons.sample(w, rng)
        for _ in range(20):
            seg = corrupt(intended, spec, rng, groups)
            if seg:
                break
        else:
            seg = intended
        bounds.append((len(observed), len(observed) + len(seg)))
        observed.extend(seg)
    return tuple(observed), bounds


def make_synthetic(n_words=120, n_train=1500, n_test=200, tokens_per_word=4,
                   max_rate=0.4, train_rate=0.15, realization_rate=0.0, seed=0,
                   groups: BroadGroupMap | None = None,
                   templates=DEFAULT_TEMPLATES) -> SyntheticData:
    """A complete train/test setup.

    The tagged training corpus comes from the grammar; each word gets
    ``tokens_per_word`` sampled pronunciations as trained realizations,
    each passed through the channel at ``realization_rate`` so the lexicon
    holds observed rather than ideal pronunciations; the channel pairs
    corrupt clean samples at ``train_rate``; test sentences are corrupted
    at a rate drawn uniformly from ``[0, max_rate]``.
    """
    rng = random.Random(seed)
    lex, prons, by_tag = make_vocabulary(n_words, seed=rng.randrange(2**31))
    grammar = Grammar([tuple(t) for t in templates], by_tag)
    train = generate_sentences(grammar, n_train, rng=rng)
    realizations = []
    pairs = []
    channel = CorruptionSpec.scaled(train_rate)
    heard = CorruptionSpec.scaled(realization_rate)
    for e in lex:
        for _ in range(tokens_per_word):
            p = prons.sample(e.word, rng)
            token = corrupt(p, heard, rng, groups) if realization_rate else p
            realizations.append((e.word, token or p, 1))
            obs = corrupt(p, channel, rng, groups)
            if obs:
                pairs.append((p, obs))
    test = []
    for k, tagged in enumerate(generate_sentences(grammar, n_test, rng=rng)):
        rate = rng.uniform(0.0, max_rate)
        observed, bounds = corrupt_sentence(tagged, prons, CorruptionSpec.scaled(rate), rng, groups)
        test.append(TestItem(f"s{k:04d}", tagged, observed, bounds, rate))
    return SyntheticData(grammar, lex, train, realizations, pairs, test)


def write_synthetic(data: SyntheticData, out_dir):
    """Write every file the ``train``/``decode``/``eval`` commands read.

    Returns a mapping of role -> path.
    """
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    paths = {
        "grammar": d / "grammar.txt",
        "lexicon": d / "lexicon.txt",
        "tagged_corpus": d / "train.tagged",
        "realizations": d / "realizations.txt",
        "pairs": d / "pairs.txt",
        "test_input": d / "test.phn",
        "test_segmented": d / "test.seg",
        "test_ref": d / "test.ref",
        "test_tagged": d / "test.tagged",
    }
    data.grammar.save(paths["grammar"])
    data.lexicon.save(paths["lexicon"])
    _write_lines(paths["tagged_corpus"], (" ".join(f"{w}/{t}" for w, t in s) for s in data.train))
    _write_lines(paths["realizations"], (f"{w}> {' '.join(p)} {c}" for w, p, c in data.realizations))
    _write_lines(paths["pairs"], (f"{' '.join(a)} | {' '.join(b)}" for a, b in data.pairs))
    _write_lines(paths["test_input"], (" ".join(t.observed) for t in data.test))
    _write_lines(paths["test_segmented"], (
        " | ".join(" ".join(t.observed[s:e]) for s, e in t.boundaries) for t in data.test))
    _write_lines(paths["test_ref"], (" ".join(w for w, _ in t.tagged) for t in data.test))
    _write_lines(paths["test_tagged"], (" ".join(f"{w}/{g}" for w, g in t.tagged) for t in data.test))
    return paths


def _write_lines(path, lines):
    Path(path).write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")


def load_pairs(path):
    """Read ``intended phonemes | observed phonemes`` lines."""
    out = []
    for lineno, line in content_lines(Path(path).read_text(encoding="utf-8")):
        left, sep, right = line.partition("|")
        if not sep or not left.split():
            raise ParseError(lineno, "expected 'intended | observed'", str(path))
        out.append((tuple(left.split()), tuple(right.split())))
    return out
