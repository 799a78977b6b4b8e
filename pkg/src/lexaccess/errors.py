"""Exception types raised across the package."""


class LexAccessError(Exception):
    """Base class for all package errors."""


class UnknownPhoneme(LexAccessError):
    def __init__(self, symbol, position=None):
        self.symbol = symbol
        self.position = position
        where = "" if position is None else f" at position {position}"
        super().__init__(f"unknown phoneme {symbol!r}{where}")


class ParseError(LexAccessError):
    def __init__(self, line, message="", path=None):
        self.line = line
        self.path = path
        prefix = f"{path}:" if path else "line "
        super().__init__(f"{prefix}{line}: {message}".rstrip(": "))


class DuplicateRealization(LexAccessError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"duplicate realization for {word!r}")


class EmptyEntry(LexAccessError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"lexicon entry {word!r} has no tags or pronunciation")


class UnknownWord(LexAccessError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"unknown word {word!r}")


class UnknownTag(LexAccessError):
    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"unknown part-of-speech tag {tag!r}")


class InvalidPairing(LexAccessError):
    def __init__(self, word, tag):
        self.word = word
        self.tag = tag
        super().__init__(f"word {word!r} cannot carry tag {tag!r}")


class InsufficientData(LexAccessError):
    pass


class MissingProbability(LexAccessError):
    def __init__(self, intended, observed):
        self.intended = intended
        self.observed = observed
        super().__init__(f"no probability for {observed!r} given {intended!r}")


class InvalidArgs(LexAccessError):
    pass


class IndexOutOfRange(LexAccessError, IndexError):
    pass


class NoHypothesis(LexAccessError):
    pass


class CapExceeded(LexAccessError):
    pass


class LineCountMismatch(LexAccessError):
    def __init__(self, counts):
        self.counts = counts
        detail = ", ".join(f"{name}={n}" for name, n in counts.items())
        super().__init__(f"line counts differ: {detail}")
