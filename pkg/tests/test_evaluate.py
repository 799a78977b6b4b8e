import csv
import io
import math

import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from lexaccess.align import CostModel
from lexaccess.codec import Scorer, bits_per_phoneme
from lexaccess.errors import InvalidArgs, UnknownWord
from lexaccess.evaluate import (
    DEFAULT_THRESHOLDS,
    SCATTER_HEADER,
    EvalRecord,
    bucket_report,
    closest_errors,
    distortion_rate,
    forced_boundaries,
    format_bucket_table,
    scatter_csv,
    word_error_rate,
)
from lexaccess.lexicon import LexEntry, Lexicon
from lexaccess.search import SearchConfig, decode

from worked_examples import DISTORTION_OPS, distortion_fixture

words = st.lists(st.sampled_from(["the", "a", "cat", "sat", "mat"]), max_size=6)


def brute_force_edits(hyp, ref):
    if not hyp or not ref:
        return len(hyp) + len(ref)
    return min(brute_force_edits(hyp[1:], ref[1:]) + (hyp[0] != ref[0]),
               brute_force_edits(hyp[1:], ref) + 1,
               brute_force_edits(hyp, ref[1:]) + 1)


def record(wer=0.0, distortion=0.0, n=3, bpp=0.0, sid="s"):
    return EvalRecord(sid, ["w"] * n, [], 0, 0, round(wer * n), wer, distortion, bpp)


class TestWordErrorRate:
    def test_identical(self):
        assert word_error_rate(["a", "b"], ["a", "b"]) == (0, 0, 0, 0.0)

    def test_bank_low(self):
        ins, dels, subs, wer = word_error_rate("the bank low was".split(),
                                               "the bungalow was".split())
        assert (ins, dels, subs) == (1, 0, 1)
        assert wer == pytest.approx(2 / 3)

    def test_empty_hypothesis(self):
        assert word_error_rate([], ["a", "b", "c"]) == (0, 3, 0, 1.0)

    def test_not_clamped(self):
        assert word_error_rate(["a"] * 5, ["b"])[3] == 5.0

    def test_empty_reference(self):
        with pytest.raises(InvalidArgs):
            word_error_rate(["a"], [])

    @settings(max_examples=300, deadline=None)
    @given(words, words.filter(bool))
    def test_matches_brute_force(self, hyp, ref):
        ins, dels, subs, wer = word_error_rate(hyp, ref)
        assert ins + dels + subs == brute_force_edits(hyp, ref)
        assert len(hyp) - len(ref) == ins - dels
        assert wer == (ins + dels + subs) / len(ref)


class TestDistortion:
    def test_worked_example(self, inventory, groups):
        lex, seq, ref, bounds = distortion_fixture()
        costs = CostModel.phonetic(inventory, groups)
        assert len(seq) == 34
        for w, (s, e) in zip(ref, bounds):
            assert closest_errors(seq[s:e], w, lex, costs) == DISTORTION_OPS[w]
        assert distortion_rate(seq, ref, bounds, lex, costs) == pytest.approx(11 / 34)
        assert round(distortion_rate(seq, ref, bounds, lex, costs), 4) == 0.3235

    def test_exact_realizations_are_zero(self, inventory, groups):
        lex, _, _, _ = distortion_fixture()
        costs = CostModel.phonetic(inventory, groups)
        seq = ("dh", "iy", "sh", "ao", "r")
        assert distortion_rate(seq, ["the", "shore"], [(0, 2), (2, 5)], lex, costs) == 0.0

    def test_one_insertion_over_five(self, inventory, groups):
        lex = Lexicon([LexEntry("cats", ("nn",), ("k", "ae", "t", "s"))])
        costs = CostModel.phonetic(inventory, groups)
        seq = ("k", "ae", "q", "t", "s")
        assert distortion_rate(seq, ["cats"], [(0, 5)], lex, costs) == pytest.approx(0.2)

    def test_forced_boundaries_when_missing(self, inventory, groups):
        lex, seq, ref, bounds = distortion_fixture()
        costs = CostModel.phonetic(inventory, groups)
        assert forced_boundaries(seq, ref, lex, costs) == bounds
        assert distortion_rate(seq, ref, None, lex, costs) == pytest.approx(11 / 34)

    def test_unknown_word(self, inventory, groups):
        lex, seq, _, _ = distortion_fixture()
        costs = CostModel.phonetic(inventory, groups)
        with pytest.raises(UnknownWord):
            distortion_rate(seq[:2], ["zebra"], [(0, 2)], lex, costs)

    def test_bad_boundaries(self, inventory, groups):
        lex, seq, ref, _ = distortion_fixture()
        costs = CostModel.phonetic(inventory, groups)
        with pytest.raises(InvalidArgs):
            distortion_rate(seq[:2], ["the"], [(0, 1)], lex, costs)


class TestBuckets:
    def test_all_below_first_threshold(self):
        rows = bucket_report([record(0.5, 0.01), record(0.0, 0.02)])
        assert len({(r.count, r.avg_wer) for r in rows}) == 1
        assert rows[0].avg_wer == 0.25

    def test_single_record(self):
        rows = bucket_report([record(0.5, 0.25)])
        assert [r.count for r in rows] == [0, 0, 1, 1, 1, 1]
        assert math.isnan(rows[0].avg_wer)
        assert all(r.avg_wer == 0.5 for r in rows[2:])

    def test_cumulative_inclusion(self):
        recs = [record(k / 10, k / 12, sid=str(k)) for k in range(10)]
        rows = bucket_report(recs)
        counts = [r.count for r in rows]
        assert counts == sorted(counts)
        assert rows[0].threshold == DEFAULT_THRESHOLDS[0]

    def test_thresholds_ascending(self):
        with pytest.raises(InvalidArgs):
            bucket_report([], [0.3, 0.1])

    def test_table_layout(self):
        rows = bucket_report([record(0.5, 0.05, n=8)])
        text = format_bucket_table(rows, rows)
        lines = text.splitlines()
        assert "PoS + word LM" in lines[0] and "word LM" in lines[0]
        assert lines[1].split() == ["dist<%", "n", "words", "ins", "del", "sub", "WER%",
                                    "ins", "del", "sub", "WER%"]
        assert [ln.split()[0] for ln in lines[2:]] == ["10", "20", "30", "40", "50", "60"]
        assert lines[2].split()[6] == "50.00"


class TestScatter:
    def test_header_only(self):
        assert scatter_csv([]) == ",".join(SCATTER_HEADER) + "\n"

    def test_one_row(self):
        rows = list(csv.reader(io.StringIO(scatter_csv([record(0.5, bpp=5.377, sid="x")]))))
        assert rows == [list(SCATTER_HEADER), ["x", "5.377000", "0.500000"]]

    def test_bits_track_errors(self, small_models, small_synth):
        sc = Scorer(small_models)
        cfg = SearchConfig(shortlist_enabled=False)
        bpp, wer = [], []
        for item in small_synth.test:
            h = decode(item.observed, small_models, cfg, scorer=sc)[0]
            bpp.append(bits_per_phoneme(h, len(item.observed)))
            wer.append(word_error_rate(h.word_list, [w for w, _ in item.tagged])[3])
        assert spearmanr(bpp, wer).statistic > 0
