"""Trained model bundle and the training pipeline."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .align import (
    ConfusionModel,
    CostModel,
    InsertionCountDist,
    estimate_confusions,
    estimate_costs,
    estimate_insertion_dist,
)
from .errors import InsufficientData
from .lexicon import Lexicon, load_lexicon
from .lm import LanguageModels, train_language_models
from .phonemes import BroadGroupMap, PhonemeInventory
from .shortlist import ClassModel, build_classes

log = logging.getLogger(__name__)

LM_FILE = "lm.json"
CONFUSION_FILE = "confusion.json"
INSERTION_FILE = "insertions.json"
COSTS_FILE = "costs.json"
CLASSES_FILE = "classes.txt"
LEXICON_FILE = "lexicon.txt"
INVENTORY_FILE = "inventory.txt"
GROUPS_FILE = "groups.txt"
MODEL_FILES = (LM_FILE, CONFUSION_FILE, INSERTION_FILE, COSTS_FILE, CLASSES_FILE)


@dataclass
class Models:
    inventory: PhonemeInventory
    groups: BroadGroupMap
    lexicon: Lexicon
    lms: LanguageModels
    costs: CostModel
    confusion: ConfusionModel
    insertion: InsertionCountDist
    classes: ClassModel | None = None

    def save(self, model_dir):
        d = Path(model_dir)
        d.mkdir(parents=True, exist_ok=True)
        self.lms.save(d / LM_FILE)
        self.confusion.save(d / CONFUSION_FILE)
        self.insertion.save(d / INSERTION_FILE)
        self.costs.save(d / COSTS_FILE)
        if self.classes is not None:
            self.classes.save(d / CLASSES_FILE)
        self.lexicon.save(d / LEXICON_FILE)
        self.inventory.save(d / INVENTORY_FILE)
        self.groups.save(d / GROUPS_FILE)

    @classmethod
    def load(cls, model_dir) -> "Models":
        d = Path(model_dir)
        inventory = PhonemeInventory.from_file(d / INVENTORY_FILE)
        classes = ClassModel.load(d / CLASSES_FILE) if (d / CLASSES_FILE).exists() else None
        return cls(
            inventory=inventory,
            groups=BroadGroupMap.from_file(d / GROUPS_FILE),
            lexicon=load_lexicon(d / LEXICON_FILE, inventory),
            lms=LanguageModels.load(d / LM_FILE),
            costs=CostModel.load(d / COSTS_FILE),
            confusion=ConfusionModel.load(d / CONFUSION_FILE),
            insertion=InsertionCountDist.load(d / INSERTION_FILE),
            classes=classes,
        )


def default_pairs(lexicon: Lexicon):
    """Fallback channel data: every trained realization token paired with
    its word's canonical pronunciation."""
    return [(lexicon[w].canonical, p) for w, p in lexicon.tokens()]


def train(inventory: PhonemeInventory, groups: BroadGroupMap, lexicon: Lexicon,
          tagged_corpus, realizations=(), pairs=None, seed=0, k_range=(1, 60),
          build_shortlist=True, folds=10) -> Models:
    """Fit every model from training data.

    ``lexicon`` is updated in place with ``realizations`` (``(word, phonemes,
    count)`` triples).  ``pairs`` are ``(intended, observed)`` phoneme
    sequences for the confusion and cost models; when omitted they are
    derived from the realizations with :func:`default_pairs`.
    """
    for word, seq, count in realizations:
        lexicon.add_realization(word, seq, count)
    lexicon.validate(inventory)
    lms = train_language_models(tagged_corpus, lexicon)
    pairs = list(pairs) if pairs is not None else default_pairs(lexicon)
    costs = estimate_costs(pairs, inventory, groups)
    log.info("cost model: %d iterations, converged=%s", costs.iterations, costs.converged)
    confusion = estimate_confusions(pairs, costs)
    try:
        insertion = estimate_insertion_dist(lexicon.tokens(), costs, folds=folds, seed=seed)
    except InsufficientData:
        log.warning("no word has two realizations; insertion counts left at the prior")
        insertion = InsertionCountDist({})
    classes = build_classes(lexicon, groups, k_range, seed) if build_shortlist else None
    return Models(inventory, groups, lexicon, lms, costs, confusion, insertion, classes)
