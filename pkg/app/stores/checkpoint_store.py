"""
Parameter checkpoint archive.

Layout (all integers little-endian):

    magic      12 bytes  b"RDGNN-CKPT-1"
    header_len uint32    length of the JSON header in bytes
    header     JSON      {"model_config": {...}, "metadata": {...},
                          "params": [{"path", "shape", "offset"}, ...]}
    data       float64   every parameter, row-major, back to back;
                         offset counts float64 values from the start of data
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"RDGNN-CKPT-1"
_LENGTH = struct.Struct("<I")
_DTYPE = np.dtype("<f8")


class CheckpointFormatError(ValueError):
    """Raised for files that are not checkpoints or are truncated."""


@dataclass
class Checkpoint:
    """Decoded checkpoint contents."""

    model_config: dict
    params: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)


def save_checkpoint(
    path: Path,
    params: list[tuple[str, np.ndarray]],
    model_config: dict,
    metadata: dict | None = None,
) -> None:
    """
    Write named parameters and the model config to one archive.

    Raises:
        ValueError: If two parameters share a path
    """
    path = Path(path)
    entries = []
    chunks = []
    offset = 0
    seen = set()
    for name, array in params:
        if name in seen:
            raise ValueError(f"duplicate parameter path '{name}'")
        seen.add(name)
        data = np.ascontiguousarray(array, dtype=_DTYPE)
        entries.append({"path": name, "shape": list(data.shape), "offset": offset})
        chunks.append(data.reshape(-1))
        offset += data.size

    header = json.dumps(
        {"model_config": model_config, "metadata": metadata or {}, "params": entries},
        sort_keys=True,
    ).encode("utf-8")
    blob = np.concatenate(chunks) if chunks else np.zeros(0, dtype=_DTYPE)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(_LENGTH.pack(len(header)))
        f.write(header)
        f.write(blob.astype(_DTYPE).tobytes())
    logger.debug(f"Saved {len(entries)} parameters ({offset} values) to {path}")


def load_checkpoint(path: Path) -> Checkpoint:
    """
    Read an archive written by save_checkpoint.

    Raises:
        CheckpointFormatError: If the magic string is wrong or the file is truncated
    """
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointFormatError(f"{path} is not a checkpoint (bad magic)")
    cursor = len(MAGIC)
    if len(raw) < cursor + _LENGTH.size:
        raise CheckpointFormatError(f"{path} is truncated before the header length")
    (header_len,) = _LENGTH.unpack_from(raw, cursor)
    cursor += _LENGTH.size
    if len(raw) < cursor + header_len:
        raise CheckpointFormatError(f"{path} is truncated inside the header")
    try:
        header = json.loads(raw[cursor : cursor + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path} has a corrupted header") from e
    cursor += header_len

    payload = raw[cursor:]
    if len(payload) % _DTYPE.itemsize:
        raise CheckpointFormatError(f"{path} has a partial float at the end of its data")
    data = np.frombuffer(payload, dtype=_DTYPE)
    params = {}
    for entry in header.get("params", []):
        shape = tuple(entry["shape"])
        size = int(np.prod(shape, dtype=int))
        start = int(entry["offset"])
        if start + size > data.size:
            raise CheckpointFormatError(f"{path} is truncated inside '{entry['path']}'")
        params[entry["path"]] = data[start : start + size].reshape(shape).astype(np.float64)
    return Checkpoint(
        model_config=header.get("model_config", {}),
        params=params,
        metadata=header.get("metadata", {}),
    )
