import math

import pytest

from lexaccess.codec import LM_WORD, sentence_code_length
from lexaccess.errors import CapExceeded, NoHypothesis
from lexaccess.lexicon import parse_lexicon
from lexaccess.lm import parse_tagged_corpus
from lexaccess.models import train
from lexaccess.search import SearchConfig, decode, exhaustive_decode

from conftest import toy_models
from oracles import brute_force_decode, toy_inputs

OPEN = SearchConfig.unpruned(slot_ratio=100.0)


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(beam_bits=0), dict(max_beam=0), dict(slot_min_ph=0),
                                    dict(slot_min_ph=5, slot_max_ph=4), dict(slot_ratio=0.5),
                                    dict(top_k=0), dict(lm="trigram"), dict(oracle_cap=0)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            SearchConfig(**kw)

    def test_unpruned(self):
        cfg = SearchConfig.unpruned()
        assert math.isinf(cfg.beam_bits) and cfg.max_beam is None and not cfg.shortlist_enabled


class TestDecode:
    def test_single_word_lexicon(self, inventory, groups):
        lex = parse_lexicon("cat|nn|k ae t\n")
        m = train(inventory, groups, lex, parse_tagged_corpus("cat/nn\n"),
                  pairs=[(("k", "ae", "t"), ("k", "ae", "t"))])
        h = decode(("k", "ae", "t"), m)[0]
        assert h.words == [("cat", "nn")] and h.boundaries == [(0, 3)]

    def test_clean_sentence_with_boundaries(self, toy):
        seq = tuple("dh ax k ae t s ae t".split())
        h = decode(seq, toy)[0]
        assert h.text() == "the cat sat"
        assert h.boundaries == [(0, 2), (2, 5), (5, 8)]

    def test_the_cat_against_brute_force(self, toy):
        seq = tuple("dh ax k ae t".split())
        h = decode(seq, toy, OPEN)[0]
        ref = brute_force_decode(seq, toy)
        assert h.text() == ref.text() == "the cat"
        assert h.boundaries == ref.boundaries == [(0, 2), (2, 5)]
        assert h.total_bits == pytest.approx(ref.total_bits, abs=1e-9)

    def test_top_k_sorted_and_distinct(self, toy):
        hyps = decode(tuple("dh ax k ae t s ae t".split()), toy, SearchConfig(top_k=5))
        assert 1 < len(hyps) <= 5
        bits = [h.total_bits for h in hyps]
        assert bits == sorted(bits)
        assert len({h.key() for h in hyps}) == len(hyps)

    def test_breakdowns_match_recomputation(self, toy):
        seq = tuple("ax m ae t s ae dx ae t dh iy k ae t".split())
        for h in decode(seq, toy, SearchConfig(top_k=3)):
            ref = sentence_code_length(seq, h.words, h.boundaries, toy)
            assert h.total_bits == pytest.approx(ref.total_bits, abs=1e-9)
            for a, b in zip(h.breakdowns, ref.breakdowns):
                assert a.total_bits == pytest.approx(b.total_bits, abs=1e-9)

    def test_prefix_scores_are_exact(self, toy):
        seq = tuple("dh ax m ae t s ae t ae t".split())
        trace = []
        decode(seq, toy, SearchConfig(top_k=3), trace=trace)
        assert trace
        for h in trace:
            words = [(w, t) for w, t, _ in h.words]
            bounds = [span for _, _, span in h.words]
            assert bounds[-1][1] == h.consumed
            ref = sentence_code_length(seq[:h.consumed], words, bounds, toy)
            assert h.bits_so_far == pytest.approx(ref.total_bits, abs=1e-9)

    def test_word_lm(self, toy):
        h = decode(tuple("dh ax k ae t".split()), toy, SearchConfig(lm=LM_WORD))[0]
        assert h.text() == "the cat"
        assert all(b.pos_bits == 0.0 for b in h.breakdowns)

    def test_empty_input(self, toy):
        with pytest.raises(ValueError):
            decode((), toy)

    def test_no_tiling(self, toy):
        cfg = SearchConfig(slot_min_ph=4, slot_max_ph=4)
        with pytest.raises(NoHypothesis):
            decode(tuple("dh ax k ae t".split()), toy, cfg)

    def test_deterministic(self, small_models, small_synth):
        seq = small_synth.test[0].observed
        a = decode(seq, small_models, SearchConfig(top_k=4))
        b = decode(seq, small_models, SearchConfig(top_k=4))
        assert [h.key() for h in a] == [h.key() for h in b]
        assert [h.total_bits for h in a] == [h.total_bits for h in b]


class TestExhaustive:
    def test_matches_hand_enumeration(self, toy):
        seq = tuple("ax k ae t".split())
        ex = exhaustive_decode(seq, toy, OPEN)
        ref = brute_force_decode(seq, toy)
        assert ex.words == ref.words and ex.boundaries == ref.boundaries
        assert ex.total_bits == pytest.approx(ref.total_bits, abs=1e-9)

    def test_one_phoneme(self, inventory, groups):
        lex = parse_lexicon("a|dt|ax\n")
        m = train(inventory, groups, lex, parse_tagged_corpus("a/dt\n"),
                  pairs=[(("ax",), ("ax",))])
        assert exhaustive_decode(("ax",), m).words == [("a", "dt")]

    def test_cap(self, toy):
        with pytest.raises(CapExceeded):
            exhaustive_decode(("ax",) * 13, toy)

    def test_agrees_with_unpruned_decode(self, toy):
        for seq in toy_inputs(toy, 40, seed=3):
            a = decode(seq, toy, SearchConfig.unpruned())[0]
            b = exhaustive_decode(seq, toy)
            assert a.key() == b.key()
            assert a.total_bits == pytest.approx(b.total_bits, abs=1e-9)


class TestPruning:
    def test_narrow_beam_loses_the_optimum(self):
        m = toy_models(build_shortlist=False)
        seq = ("ey", "ae", "t", "dh", "iy")  # a at the
        best = exhaustive_decode(seq, m)
        narrow = decode(seq, m, SearchConfig(beam_bits=0.5, max_beam=1,
                                             shortlist_enabled=False))[0]
        assert best.text() == "a at the"
        assert narrow.text() == "mat the"
        assert narrow.total_bits > best.total_bits

    def test_wider_beam_never_worse(self, toy, small_models, small_synth):
        cases = [(toy, s) for s in toy_inputs(toy, 15, seed=9)]
        cases += [(small_models, t.observed) for t in small_synth.test[:5]]
        for m, seq in cases:
            prev = math.inf
            for beam in (0.5, 1, 2, 4, 8, 16, 32, math.inf):
                cfg = SearchConfig(beam_bits=beam, max_beam=None, shortlist_enabled=False)
                bits = decode(seq, m, cfg)[0].total_bits
                assert bits <= prev + 1e-9
                prev = bits

    def test_shortlist_bypass_ignores_classes(self, small_synth, small_models):
        seq = small_synth.test[1].observed
        cfg = SearchConfig(shortlist_enabled=False)
        a = decode(seq, small_models, cfg)[0]
        saved = small_models.classes
        try:
            small_models.classes = None
            b = decode(seq, small_models, cfg)[0]
        finally:
            small_models.classes = saved
        assert a.key() == b.key() and a.total_bits == b.total_bits
