"""
Utility functions for reading and writing JSONL files.
"""

import json
from collections.abc import Callable, Iterator
from pathlib import Path
from typing import IO


class JsonlLineError(ValueError):
    """Raised when one line of a JSONL file cannot be decoded or parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


def iter_jsonl[T](
    file_path: Path, parser: Callable[[dict], T], keep: Callable[[int], bool] | None = None
) -> Iterator[T]:
    """
    Stream a JSONL file, converting each record with parser.

    Blank lines are skipped but still counted, so reported line numbers match
    what an editor shows.

    Args:
        file_path: Path to the JSONL file
        parser: Function to convert a dict to the desired type
        keep: Optional filter on the 0-based record index; skipped records are not decoded

    Yields:
        Parsed objects in file order

    Raises:
        JsonlLineError: If a line is not valid JSON or the parser rejects it
    """
    record_index = 0
    with open(file_path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            index = record_index
            record_index += 1
            if keep is not None and not keep(index):
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise JsonlLineError(line_number, f"invalid JSON ({e.msg})") from e
            if not isinstance(data, dict):
                raise JsonlLineError(line_number, "expected a JSON object")
            try:
                yield parser(data)
            except (KeyError, TypeError, ValueError) as e:
                raise JsonlLineError(line_number, f"malformed record ({e})") from e


def count_records(file_path: Path) -> int:
    """Number of non-blank lines."""
    with open(file_path, encoding="utf-8") as f:
        return sum(1 for line in f if line.strip())


def write_jsonl_line(f: IO[str], record: dict) -> None:
    """Write one compact JSON record and a newline."""
    f.write(json.dumps(record, separators=(",", ":"), allow_nan=False))
    f.write("\n")
