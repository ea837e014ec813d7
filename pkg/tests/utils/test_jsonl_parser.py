"""
Tests for JSONL reading and writing utilities.
"""

import pytest

from app.utils.jsonl_parser import (
    JsonlLineError,
    count_records,
    iter_jsonl,
    write_jsonl_line,
)


class TestIterJsonl:
    """Tests for iter_jsonl."""

    def test_parse_records(self, tmp_path):
        """Test each line is converted with the parser."""
        path = tmp_path / "data.jsonl"
        path.write_text('{"a": 1}\n{"a": 2}\n', encoding="utf-8")
        assert list(iter_jsonl(path, lambda d: d["a"])) == [1, 2]

    def test_blank_lines_skipped_but_counted(self, tmp_path):
        """Test line numbers in errors count blank lines."""
        path = tmp_path / "data.jsonl"
        path.write_text('{"a": 1}\n\nnot json\n', encoding="utf-8")
        with pytest.raises(JsonlLineError) as exc_info:
            list(iter_jsonl(path, lambda d: d["a"]))
        assert exc_info.value.line_number == 3
        assert "invalid JSON" in str(exc_info.value)

    def test_non_object_line(self, tmp_path):
        """Test a JSON array line is rejected."""
        path = tmp_path / "data.jsonl"
        path.write_text("[1, 2]\n", encoding="utf-8")
        with pytest.raises(JsonlLineError, match="expected a JSON object"):
            list(iter_jsonl(path, dict))

    def test_parser_error_wrapped(self, tmp_path):
        """Test a KeyError in the parser becomes a JsonlLineError."""
        path = tmp_path / "data.jsonl"
        path.write_text('{"b": 1}\n', encoding="utf-8")
        with pytest.raises(JsonlLineError, match="malformed record"):
            list(iter_jsonl(path, lambda d: d["a"]))

    def test_keep_filter_skips_decoding(self, tmp_path):
        """Test records rejected by keep are never parsed, even if malformed."""
        path = tmp_path / "data.jsonl"
        path.write_text('{"a": 0}\nbroken\n{"a": 2}\n', encoding="utf-8")
        assert list(iter_jsonl(path, lambda d: d["a"], keep=lambda i: i != 1)) == [0, 2]


class TestWriteJsonl:
    """Tests for write_jsonl_line and count_records."""

    def test_write_and_count(self, tmp_path):
        """Test written records are compact, one per line."""
        path = tmp_path / "out.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for record in ({"a": 1}, {"b": [1, 2]}):
                write_jsonl_line(f, record)
        assert path.read_text(encoding="utf-8") == '{"a":1}\n{"b":[1,2]}\n'
        assert count_records(path) == 2

    def test_nan_rejected(self, tmp_path):
        """Test NaN cannot be written."""
        with open(tmp_path / "out.jsonl", "w", encoding="utf-8") as f, pytest.raises(ValueError):
            write_jsonl_line(f, {"a": float("nan")})
