import json
import math

import pytest

from lexaccess.align import CostModel
from lexaccess.cli import main
from lexaccess.codec import parse_breakdown
from lexaccess.lexicon import parse_lexicon
from lexaccess.lm import parse_tagged_corpus
from lexaccess.models import CLASSES_FILE, LM_FILE, train
from lexaccess.shortlist import ClassModel, EquivalenceClass

from conftest import TOY_CORPUS, TOY_LEXICON
from worked_examples import DISTORTION_SEGMENTS, distortion_fixture


def write_toy(tmp_path, corpus=TOY_CORPUS):
    (tmp_path / "lexicon.txt").write_text(TOY_LEXICON)
    (tmp_path / "train.tagged").write_text(corpus)
    (tmp_path / "config.txt").write_text(
        "lexicon = lexicon.txt\ntagged_corpus = train.tagged\nmodel_dir = model\n"
        "k_max = 6\nfolds = 4\n")
    return tmp_path / "config.txt"


@pytest.fixture
def trained(tmp_path):
    cfg = write_toy(tmp_path)
    assert main(["train", "-c", str(cfg)]) == 0
    return tmp_path


def decode_lines(d, lines, *extra):
    (d / "in.txt").write_text("".join(ln + "\n" for ln in lines))
    code = main(["decode", "--model-dir", str(d / "model"), str(d / "in.txt"),
                 "-o", str(d / "out.txt"), *extra])
    out = d / "out.txt"
    return code, out.read_text().splitlines() if out.exists() else []


def lex_groups(model_dir):
    return ClassModel.load(model_dir / CLASSES_FILE).groups


class TestTrain:
    def test_writes_model_dir(self, trained, capsys):
        names = {p.name for p in (trained / "model").iterdir()}
        assert {"lm.json", "costs.json", "lexicon.txt", "classes.txt"} <= names

    def test_missing_lexicon_names_path(self, tmp_path, capsys):
        cfg = write_toy(tmp_path)
        (tmp_path / "lexicon.txt").unlink()
        assert main(["train", "-c", str(cfg)]) == 2
        assert "lexicon.txt" in capsys.readouterr().err

    def test_doubled_corpus_doubles_counts(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        assert main(["train", "-c", str(write_toy(a))]) == 0
        assert main(["train", "-c", str(write_toy(b, TOY_CORPUS * 2))]) == 0
        one = json.loads((a / "model" / LM_FILE).read_text())
        two = json.loads((b / "model" / LM_FILE).read_text())
        assert [r[:-1] + [2 * r[-1]] for r in one["pos_trigrams"]] == two["pos_trigrams"]

    def test_no_shortlist_skips_classes(self, tmp_path):
        cfg = write_toy(tmp_path)
        assert main(["train", "-c", str(cfg), "--no-shortlist"]) == 0
        assert not (tmp_path / "model" / CLASSES_FILE).exists()


class TestDecode:
    def test_clean_sentence(self, trained):
        code, out = decode_lines(trained, ["dh ax k ae t s ae t"])
        assert code == 0
        words, bits, bpp = out[0].split("\t")
        assert words == "the cat sat"
        assert float(bpp) == pytest.approx(float(bits) / 8, abs=1e-4)

    def test_boundary_tokens_ignored(self, trained):
        _, a = decode_lines(trained, ["dh ax | k ae t"])
        _, b = decode_lines(trained, ["dh ax k ae t"])
        assert a == b

    def test_empty_file(self, trained):
        code, out = decode_lines(trained, [])
        assert code == 0 and out == []

    def test_empty_line_reported(self, trained, capsys):
        code, out = decode_lines(trained, ["dh ax", "", "k ae t"])
        assert code == 1
        assert len(out) == 3 and out[1] == "\tnan\tnan"
        assert "in.txt:2" in capsys.readouterr().err

    def test_no_hypothesis(self, trained, capsys):
        code, out = decode_lines(trained, ["dh ax k ae t"], "--no-shortlist",
                                 "--beam-bits", "1", "-c", str(self.narrow_slots(trained)))
        assert code == 1 and out == ["\tnan\tnan"]

    @staticmethod
    def narrow_slots(d):
        p = d / "narrow.txt"
        p.write_text("slot_min_ph = 4\nslot_max_ph = 4\n")
        return p

    def test_unknown_phoneme_location(self, trained, capsys):
        code, _ = decode_lines(trained, ["dh ax", "k zz t"])
        assert code == 2
        assert "in.txt:2" in capsys.readouterr().err

    def test_top_k_and_breakdown(self, trained):
        code, out = decode_lines(trained, ["dh ax k ae t s ae t"], "--top-k", "3",
                                 "--breakdown")
        assert code == 0
        assert [ln.split("\t")[0] for ln in out[1:3]] == ["# 2", "# 3"]
        table = "\n".join(ln[2:] for ln in out if ln.startswith("# ") and "\t" not in ln)
        first = table.split("line 1, rank 2")[0]
        rows, footer = parse_breakdown(first)
        assert [r[0] for r in rows] == ["the", "cat", "sat"]
        assert footer[3] == pytest.approx(float(out[0].split("\t")[1]), abs=0.02)
        for r in rows:
            assert r[2] + r[3] + r[4] == pytest.approx(r[5], abs=0.02)

    def test_shortlist_miss_recovered_by_bypass(self, trained):
        m = trained / "model"
        lex = parse_lexicon(TOY_LEXICON)
        others = [(e.word, j) for e in lex if e.word != "cat" for j in range(len(e.realizations))]
        cats = [("cat", j) for j in range(len(lex["cat"].realizations))]
        ClassModel([EquivalenceClass(0, ("stop", "vowel", "stop"), others),
                    EquivalenceClass(1, ("vowel",) * 6, cats)],
                   lex_groups(m)).save(m / CLASSES_FILE)
        _, narrow = decode_lines(trained, ["dh ax k ae t"])
        _, full = decode_lines(trained, ["dh ax k ae t"], "--no-shortlist")
        assert "cat" not in narrow[0].split("\t")[0].split()
        assert full[0].split("\t")[0] == "the cat"

    def test_byte_identical_reruns(self, trained):
        lines = ["dh ax k ae t s ae t", "ey m ae t s ae dx", "ax t dh iy m ae t"]
        _, a = decode_lines(trained, lines, "--top-k", "2")
        _, b = decode_lines(trained, lines, "--top-k", "2")
        assert a == b

    def test_missing_model_dir(self, tmp_path, capsys):
        (tmp_path / "in.txt").write_text("dh ax\n")
        assert main(["decode", "--model-dir", str(tmp_path / "nope"),
                     str(tmp_path / "in.txt")]) == 2


class TestEval:
    def test_line_count_mismatch(self, trained, capsys):
        d = trained
        (d / "hyp.txt").write_text("the cat\t10.0\t2.0\n")
        (d / "ref.txt").write_text("the cat\nthe mat\n")
        (d / "in.txt").write_text("dh ax k ae t\n")
        assert main(["eval", "--model-dir", str(d / "model"), str(d / "hyp.txt"),
                     str(d / "ref.txt"), str(d / "in.txt")]) == 2
        assert "line counts differ" in capsys.readouterr().err

    def test_distortion_sentence(self, tmp_path, inventory, groups, capsys):
        lex, seq, words, _ = distortion_fixture()
        corpus = " ".join(f"{w}/x" for w in words) + "\n"
        m = train(inventory, groups, lex, parse_tagged_corpus(corpus), build_shortlist=False)
        m.costs = CostModel.phonetic(inventory, groups)
        m.save(tmp_path / "model")
        (tmp_path / "hyp.txt").write_text(" ".join(words) + "\t100.0\t2.9\n")
        (tmp_path / "ref.txt").write_text(" ".join(f"{w}/x" for w in words) + "\n")
        (tmp_path / "in.txt").write_text(" | ".join(s for _, s in DISTORTION_SEGMENTS) + "\n")
        code = main(["eval", "--model-dir", str(tmp_path / "model"), str(tmp_path / "hyp.txt"),
                     str(tmp_path / "ref.txt"), str(tmp_path / "in.txt"),
                     "--csv", str(tmp_path / "s.csv")])
        out = capsys.readouterr().out
        assert code == 0
        assert "aggregate WER 0.00%" in out
        row = [ln for ln in out.splitlines() if ln.split() and ln.split()[0] == "40"][0]
        assert row.split()[1] == "1"
        assert [ln.split()[1] for ln in out.splitlines()
                if ln.split() and ln.split()[0] == "30"] == ["0"]
        assert (tmp_path / "s.csv").read_text().splitlines()[1].startswith("1,")

    def test_compare_table(self, trained, capsys):
        d = trained
        (d / "hyp.txt").write_text("the cat sat\t30.0\t3.0\n")
        (d / "hyp2.txt").write_text("the mat\t30.0\t3.0\n")
        (d / "ref.txt").write_text("the/dt cat/nn sat/vbd\n")
        (d / "in.txt").write_text("dh ax | k ae t | s ae t\n")
        assert main(["eval", "--model-dir", str(d / "model"), str(d / "hyp.txt"),
                     str(d / "ref.txt"), str(d / "in.txt"), "--compare",
                     str(d / "hyp2.txt")]) == 0
        out = capsys.readouterr().out
        assert "aggregate WER 0.00%" in out and "comparison WER 66.67%" in out


class TestClassesAndSynth:
    def test_classes_from_model_dir(self, trained, capsys):
        assert main(["classes", "--model-dir", str(trained / "model"),
                     "-o", str(trained / "c.txt")]) == 0
        model = ClassModel.load(trained / "c.txt")
        assert model.member_count() == 11

    def test_synth_then_train_decode_eval(self, tmp_path, capsys):
        d = tmp_path / "syn"
        assert main(["synth", str(d), "--words", "30", "--train", "150", "--test", "4"]) == 0
        assert main(["train", "-c", str(d / "config.txt"), "--no-shortlist"]) == 0
        assert main(["decode", "-c", str(d / "config.txt"), str(d / "test.phn"),
                     "-o", str(d / "hyp.txt")]) == 0
        assert main(["eval", "-c", str(d / "config.txt"), str(d / "hyp.txt"),
                     str(d / "test.ref"), str(d / "test.seg")]) == 0
        wer = float(capsys.readouterr().out.split("aggregate WER ")[1].split("%")[0])
        assert 0.0 <= wer <= 100.0 and not math.isnan(wer)
