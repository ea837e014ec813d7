"""
Tests for the episode corpus store.
"""

import json

import pytest

from app.stores.corpus_store import (
    FORMAT_VERSION,
    CorpusFormatError,
    manifest_path,
    read_corpus,
    split,
    write_corpus,
)


class TestSplit:
    """Tests for the train/val/test split."""

    def test_sizes_and_coverage(self):
        """Test 10 episodes at 0.8/0.1/0.1 split 8/1/1 and cover every index once."""
        splits = split(10, (0.8, 0.1, 0.1), seed=0)
        assert [len(splits[k]) for k in ("train", "val", "test")] == [8, 1, 1]
        assert sorted(i for v in splits.values() for i in v) == list(range(10))

    def test_deterministic(self):
        """Test the same seed gives the same split."""
        assert split(20, seed=4) == split(20, seed=4)

    def test_all_train(self):
        """Test fractions (1, 0, 0) put everything in train."""
        splits = split(5, (1.0, 0.0, 0.0))
        assert splits["train"] == [0, 1, 2, 3, 4]
        assert splits["val"] == [] and splits["test"] == []

    def test_bad_fractions(self):
        """Test fractions must sum to one."""
        with pytest.raises(ValueError, match="sum to 1"):
            split(10, (0.5, 0.1, 0.1))


class TestCorpus:
    """Tests for write_corpus and read_corpus."""

    def test_write_then_read(self, tiny_corpus):
        """Test every written episode is readable with its horizon range intact."""
        assert len(tiny_corpus) == 10
        episodes = list(tiny_corpus.iter_episodes())
        assert len(episodes) == 10
        assert all(1 <= e.horizon <= 2 for e in episodes)
        assert all(2 <= e.n_objects <= 3 for e in episodes)
        assert tiny_corpus.manifest.generation["seed"] == 3

    def test_load_by_index(self, tiny_corpus):
        """Test load returns the requested episodes keyed by index."""
        all_episodes = list(tiny_corpus.iter_episodes())
        loaded = tiny_corpus.load([3, 1])
        assert sorted(loaded) == [1, 3]
        assert loaded[3].to_dict() == all_episodes[3].to_dict()

    def test_iter_split(self, tiny_split_corpus):
        """Test split iteration yields as many episodes as the manifest lists."""
        for name in ("train", "val", "test"):
            assert len(list(tiny_split_corpus.iter_split(name))) == len(
                tiny_split_corpus.indices(name)
            )

    def test_unknown_split(self, tiny_corpus):
        """Test asking for a missing split raises."""
        with pytest.raises(ValueError, match="no split"):
            tiny_corpus.indices("holdout")

    def test_missing_manifest_rebuilt(self, tiny_corpus):
        """Test a corpus without its sidecar still opens with default splits."""
        manifest_path(tiny_corpus.path).unlink()
        corpus = read_corpus(tiny_corpus.path)
        assert len(corpus) == 10
        assert len(corpus.indices("train")) == 8

    def test_wrong_version(self, tiny_corpus):
        """Test another format version is refused."""
        sidecar = manifest_path(tiny_corpus.path)
        raw = json.loads(sidecar.read_text(encoding="utf-8"))
        raw["format_version"] = "RDGNN-DS-0"
        sidecar.write_text(json.dumps(raw), encoding="utf-8")
        with pytest.raises(CorpusFormatError, match=FORMAT_VERSION):
            read_corpus(tiny_corpus.path)

    def test_truncated_line(self, tmp_path, tiny_corpus):
        """Test a cut-off final line reports its line number."""
        text = tiny_corpus.path.read_text(encoding="utf-8").rstrip("\n")
        tiny_corpus.path.write_text(text[:-20] + "\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError) as exc_info:
            list(read_corpus(tiny_corpus.path).iter_episodes())
        assert exc_info.value.line_number == 10

    def test_empty_corpus(self, tmp_path):
        """Test zero episodes write a valid, empty corpus."""
        path = tmp_path / "empty.jsonl"
        manifest = write_corpus([], path)
        assert manifest.n_episodes == 0
        assert list(read_corpus(path).iter_episodes()) == []
