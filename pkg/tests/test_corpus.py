import json

import pytest

from selecteval.corpus import (
    IngestError,
    UnigramModel,
    load_dialogues,
    load_embeddings,
    load_exclusion,
    load_repository,
    load_stopwords,
    normalize_text,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


class TestLoadDialogues:
    def test_four_turn_split(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"turns": ["t1", "t2", "t3", "t4", "t5"]})])
        result = load_dialogues(path)
        assert len(result.samples) == 1
        sample = result.samples[0]
        assert sample.context == ("t1", "t2", "t3")
        assert sample.ground_truth == "t4"

    def test_short_record_skipped_and_counted(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"turns": ["a", "b", "c"]}),
            json.dumps({"turns": ["a", "b", "c", "d"]}),
        ])
        result = load_dialogues(path)
        assert len(result.samples) == 1
        assert result.skipped == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text("", encoding="utf-8")
        result = load_dialogues(path)
        assert result.samples == []
        assert result.skipped == 0

    def test_empty_turn_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [json.dumps({"turns": ["a", "  ", "c", "d"]})])
        result = load_dialogues(path)
        assert result.samples == []
        assert result.skipped == 1

    def test_missing_file_fatal(self, tmp_path):
        with pytest.raises(IngestError):
            load_dialogues(tmp_path / "nope.jsonl")

    def test_ids_respected_and_generated(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"id": "dlg-7", "turns": ["a", "b", "c", "d"]}),
            json.dumps({"turns": ["a", "b", "c", "d2"]}),
        ])
        result = load_dialogues(path)
        assert result.samples[0].id == "dlg-7"
        assert result.samples[1].id == "d00001"

    def test_duplicate_ids_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        write_lines(path, [
            json.dumps({"id": "dup", "turns": ["a", "b", "c", "d"]}),
            json.dumps({"id": "dup", "turns": ["e", "f", "g", "h"]}),
        ])
        result = load_dialogues(path)
        assert [s.id for s in result.samples] == ["dup"]
        assert result.samples[0].ground_truth == "d"
        assert result.skipped == 1


class TestLoadRepository:
    def test_exclusion(self, tmp_path):
        path = tmp_path / "r.txt"
        write_lines(path, ["alpha one", "beta two", "gamma three", "delta four", "epsilon five"])
        repo = load_repository(path, exclusion={"beta two", "delta four"})
        assert len(repo) == 3
        assert not repo.contains_normalized("Beta  Two")

    def test_duplicates_kept_once(self, tmp_path):
        path = tmp_path / "r.txt"
        write_lines(path, ["Hello there", "hello   THERE", "bye"])
        repo = load_repository(path)
        assert len(repo) == 2
        assert repo.get("u000000").text == "Hello there"

    def test_no_exclusion_keeps_all(self, tmp_path):
        path = tmp_path / "r.txt"
        write_lines(path, ["a b", "c d", "e f"])
        assert len(load_repository(path)) == 3

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.txt"
        write_lines(path, ["One fine day", "one  fine day", "Two cups", "", "Three dogs"])
        repo = load_repository(path)
        out = tmp_path / "out.txt"
        repo.write(out)
        reloaded = load_repository(out)
        assert repo.id_to_text() == reloaded.id_to_text()

    def test_exclusion_soundness(self, tmp_path):
        path = tmp_path / "r.txt"
        lines = [f"utterance number {i}" for i in range(20)]
        write_lines(path, lines)
        exclusion = {normalize_text(l) for l in lines[::3]}
        repo = load_repository(path, exclusion=exclusion)
        for utt in repo:
            assert normalize_text(utt.text) not in exclusion


class TestLoadEmbeddings:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "e.txt"
        write_lines(path, ["cat 1.0 0.5 0.25", "dog 0.0 1.0 2.0"])
        table = load_embeddings(path)
        assert table.dimension == 3
        assert len(table) == 2
        assert table.get("cat")[2] == 0.25

    def test_dimension_mismatch_names_line(self, tmp_path):
        path = tmp_path / "e.txt"
        write_lines(path, ["cat 1.0 0.5 0.25", "dog 0.0 1.0 2.0 3.0"])
        with pytest.raises(IngestError, match="line 2"):
            load_embeddings(path)

    def test_empty_file_fatal(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(IngestError):
            load_embeddings(path)

    def test_duplicate_word_keeps_first(self, tmp_path):
        path = tmp_path / "e.txt"
        write_lines(path, ["cat 1.0 2.0", "cat 9.0 9.0"])
        table = load_embeddings(path)
        assert table.get("cat")[0] == 1.0


class TestUnigramModel:
    def test_probabilities(self):
        model = UnigramModel.from_counts({"a": 3, "b": 1})
        assert model.total == 4
        assert model.probability("a") == 0.75
        assert model.probability("zz") == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            UnigramModel.from_counts({})


def test_normalize_text():
    assert normalize_text("  Hello   WORLD ") == "hello world"
    assert normalize_text("a\tb\nc") == "a b c"


def test_packaged_stopwords_cover_function_words():
    words = load_stopwords()
    assert {"do", "i", "have", "to", "it", "the"} <= words
    assert "focus" not in words


def test_stopword_file_override(tmp_path):
    path = tmp_path / "sw.txt"
    path.write_text("# comment\nfoo\nBAR\n\n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"foo", "bar"})


def test_exclusion_file(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("Hello  World\n\nBye\n", encoding="utf-8")
    assert load_exclusion(path) == {"hello world", "bye"}
