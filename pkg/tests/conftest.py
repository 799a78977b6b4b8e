import pytest

from lexaccess.lexicon import parse_lexicon
from lexaccess.lm import parse_tagged_corpus
from lexaccess.models import train
from lexaccess.phonemes import default_broad_groups, default_inventory
from lexaccess.synth import make_synthetic

TOY_LEXICON = """\
the|dt|dh ax
a|dt|ax
cat|nn|k ae t
mat|nn|m ae t
sat|vbd|s ae t
at|in|ae t
the> dh ax 3
the> dh iy 1
a> ax 2
a> ey 1
cat> k ae t 3
cat> k ae dx 1
mat> m ae t 2
sat> s ae t 2
sat> s ae dx 1
at> ae t 2
at> ax t 1
"""

TOY_CORPUS = """\
the/dt cat/nn sat/vbd
a/dt cat/nn sat/vbd at/in the/dt mat/nn
the/dt mat/nn sat/vbd
a/dt mat/nn sat/vbd at/in a/dt cat/nn
the/dt cat/nn sat/vbd at/in the/dt mat/nn
"""


@pytest.fixture(scope="session")
def inventory():
    return default_inventory()


@pytest.fixture(scope="session")
def groups():
    return default_broad_groups()


def toy_models(build_shortlist=True):
    inv, g = default_inventory(), default_broad_groups()
    lex = parse_lexicon(TOY_LEXICON, inventory=inv)
    return train(inv, g, lex, parse_tagged_corpus(TOY_CORPUS), k_range=(1, 6),
                 build_shortlist=build_shortlist, folds=4)


@pytest.fixture(scope="session")
def toy():
    return toy_models()


@pytest.fixture(scope="session")
def small_synth(groups):
    return make_synthetic(n_words=40, n_train=400, n_test=20, groups=groups, seed=5)


@pytest.fixture(scope="session")
def small_models(small_synth, inventory, groups):
    d = small_synth
    return train(inventory, groups, d.lexicon, d.train, d.realizations, d.pairs,
                 k_range=(1, 20))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
