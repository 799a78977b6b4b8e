"""Lexical access by minimum message length.

Decodes a (possibly corrupted) phoneme string into the word sentence whose
two-part message -- language-model bits plus phoneme-difference bits -- is
shortest.
"""

from .errors import LexAccessError, NoHypothesis, UnknownPhoneme
from .phonemes import (
    BroadGroupMap,
    PhonemeInventory,
    default_broad_groups,
    default_inventory,
    parse_phoneme_seq,
    to_broad_groups,
)
from .lexicon import LexEntry, Lexicon, Realization, load_lexicon

__version__ = "0.1.0"
