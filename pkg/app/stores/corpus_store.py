"""
Episode corpus persistence: one episode per JSONL line plus a manifest sidecar.

Files are `<name>.jsonl` and `<name>.manifest.json`. See docs/formats.md for
the schema and a worked example.
"""

import json
import logging
import time
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.utils.jsonl_parser import JsonlLineError, count_records, iter_jsonl, write_jsonl_line
from models import Episode

logger = logging.getLogger(__name__)

FORMAT_VERSION = "RDGNN-DS-1"
SPLIT_NAMES = ("train", "val", "test")
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


class CorpusFormatError(ValueError):
    """Raised for version mismatches and unreadable corpus lines."""

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CorpusManifest(BaseModel):
    """Sidecar describing a corpus file."""

    format_version: Literal["RDGNN-DS-1"] = FORMAT_VERSION
    n_episodes: int = Field(ge=0)
    seed: int = 0
    generation: dict | None = None
    splits: dict[str, list[int]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_splits(self):
        if not self.splits:
            return self
        seen: set[int] = set()
        for name, indices in self.splits.items():
            overlap = seen.intersection(indices)
            if overlap or len(set(indices)) != len(indices):
                raise ValueError(f"split '{name}' repeats episode indices")
            seen.update(indices)
        if seen != set(range(self.n_episodes)):
            raise ValueError("splits must cover every episode index exactly once")
        return self


def manifest_path(corpus_path: Path) -> Path:
    """`data/corpus.jsonl` -> `data/corpus.manifest.json`."""
    corpus_path = Path(corpus_path)
    return corpus_path.with_name(f"{corpus_path.stem}.manifest.json")


def split(
    n_episodes: int, fractions: Sequence[float] = DEFAULT_FRACTIONS, seed: int = 0
) -> dict[str, list[int]]:
    """
    Shuffle episode indices with seed and partition them into train/val/test.

    Sizes use largest remainders, so 10 episodes at (0.8, 0.1, 0.1) give 8/1/1.

    Raises:
        ValueError: If fractions are not three non-negative values summing to 1
    """
    if len(fractions) != len(SPLIT_NAMES) or any(f < 0 for f in fractions):
        raise ValueError(f"fractions must be three non-negative values, got {tuple(fractions)}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    if n_episodes < 0:
        raise ValueError(f"n_episodes must be non-negative, got {n_episodes}")

    exact = np.array(fractions, dtype=float) * n_episodes
    sizes = np.floor(exact + 1e-9).astype(int)
    remainders = exact - sizes
    for k in np.argsort(-remainders, kind="stable")[: n_episodes - int(sizes.sum())]:
        sizes[k] += 1

    order = np.random.default_rng(seed).permutation(n_episodes)
    splits = {}
    start = 0
    for name, size in zip(SPLIT_NAMES, sizes, strict=True):
        splits[name] = sorted(int(i) for i in order[start : start + size])
        start += size
    return splits


class Corpus:
    """Read handle over a corpus file; iteration streams one episode at a time."""

    def __init__(self, path: Path, manifest: CorpusManifest):
        self.path = Path(path)
        self.manifest = manifest

    def __len__(self):
        return self.manifest.n_episodes

    def indices(self, split_name: str | None = None) -> list[int]:
        if split_name is None:
            return list(range(self.manifest.n_episodes))
        if split_name not in self.manifest.splits:
            raise ValueError(f"corpus has no split '{split_name}'")
        return list(self.manifest.splits[split_name])

    def iter_episodes(self, indices: Iterable[int] | None = None) -> Iterator[Episode]:
        """
        Stream episodes in file order, optionally restricted to indices.

        Raises:
            CorpusFormatError: If a line is truncated or corrupted
        """
        wanted = None if indices is None else set(indices)
        keep = None if wanted is None else wanted.__contains__
        try:
            yield from iter_jsonl(self.path, Episode.from_dict, keep=keep)
        except JsonlLineError as e:
            raise CorpusFormatError(e.reason, line_number=e.line_number) from e

    def iter_split(self, split_name: str) -> Iterator[Episode]:
        return self.iter_episodes(self.indices(split_name))

    def load(self, indices: Iterable[int]) -> dict[int, Episode]:
        """Episodes for the given indices, keyed by index."""
        wanted = sorted(set(indices))
        return dict(zip(wanted, self.iter_episodes(wanted), strict=True))


def write_corpus(
    episodes: Iterable[Episode],
    path: Path,
    seed: int = 0,
    generation: dict | None = None,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
) -> CorpusManifest:
    """
    Stream episodes to `path` and write the manifest sidecar.

    Args:
        episodes: Episodes in index order (consumed lazily)
        path: Target `.jsonl` file; parent directories are created
        seed: Seed recorded in the manifest and used for the split shuffle
        generation: Generation config snapshot stored in the manifest
        fractions: Train/val/test fractions

    Returns:
        The manifest that was written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for episode in episodes:
            write_jsonl_line(f, episode.to_dict())
            count += 1
            if count % 100 == 0:
                logger.debug(f"Wrote {count} episodes")

    manifest = CorpusManifest(
        n_episodes=count,
        seed=seed,
        generation=generation,
        splits=split(count, fractions, seed),
    )
    manifest_path(path).write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote {count} episodes to {path} in {time.perf_counter() - started:.1f}s")
    return manifest


def read_corpus(path: Path) -> Corpus:
    """
    Open a corpus for streaming reads.

    A missing manifest is rebuilt in memory with default splits.

    Raises:
        CorpusFormatError: If the manifest is invalid or has another format version
    """
    path = Path(path)
    sidecar = manifest_path(path)
    if not sidecar.exists():
        n = count_records(path)
        logger.warning(f"No manifest next to {path}, using default splits for {n} episodes")
        return Corpus(path, CorpusManifest(n_episodes=n, splits=split(n)))

    try:
        raw = json.loads(sidecar.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise CorpusFormatError(f"manifest {sidecar} is not valid JSON") from e
    version = raw.get("format_version") if isinstance(raw, dict) else None
    if version != FORMAT_VERSION:
        raise CorpusFormatError(f"unsupported corpus format {version!r}, expected {FORMAT_VERSION}")
    try:
        manifest = CorpusManifest.model_validate(raw)
    except ValidationError as e:
        raise CorpusFormatError(f"invalid manifest {sidecar}: {e}") from e
    return Corpus(path, manifest)
