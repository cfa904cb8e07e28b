"""
Binary checkpoint container.

All integers are little-endian::

    magic        8 bytes   b"STNLGCKP"
    version      uint32    FORMAT_VERSION
    header_len   uint32    length of the header in bytes
    header       UTF-8     sorted `key=value` lines: `model.<field>` for every
                           ModelConfig field, `vocab.<kind>.sha256`, `seed`,
                           `fingerprint`, plus any extra metadata
    count        uint32    number of parameter blobs
    count times:
      name_len   uint16
      name       UTF-8
      ndim       uint8
      dims       uint32 * ndim
      data       float64 * prod(dims), row-major

Nothing time-dependent is written, so equal parameters give equal files.
"""
from __future__ import annotations

import struct
from collections import OrderedDict
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..errors import ChecksumMismatch, DataError
from ..numerics import Node, parameter
from .model import ModelConfig, ModelParams

MAGIC = b"STNLGCKP"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    params: ModelParams
    header: Dict[str, str]

    @property
    def config(self) -> ModelConfig:
        return self.params.config

    @property
    def vocab_digests(self) -> Dict[str, str]:
        return {
            key[len("vocab.") : -len(".sha256")]: value
            for key, value in self.header.items()
            if key.startswith("vocab.") and key.endswith(".sha256")
        }

    def verify_vocabs(self, digests: Mapping[str, str]) -> None:
        """Raises `ChecksumMismatch` when the vocabularies differ from training time."""
        expected = self.vocab_digests
        for kind, digest in digests.items():
            if expected.get(kind) != digest:
                raise ChecksumMismatch(
                    f"{kind} vocabulary does not match the one the checkpoint was"
                    " trained with"
                )


def _header_text(
    config: ModelConfig, vocab_digests: Mapping[str, str], extra: Mapping[str, object]
) -> bytes:
    entries: Dict[str, str] = {
        f"model.{name}": str(value) for name, value in config.as_dict().items()
    }
    entries.update(
        {f"vocab.{kind}.sha256": digest for kind, digest in vocab_digests.items()}
    )
    for key, value in extra.items():
        if "\n" in str(value) or "=" in key:
            raise ValueError(f"header entry {key!r} cannot be stored")
        entries[key] = str(value)
    return "".join(f"{k}={entries[k]}\n" for k in sorted(entries)).encode("utf-8")


def save_checkpoint(
    path: Path,
    params: ModelParams,
    vocab_digests: Mapping[str, str],
    **extra: object,
) -> None:
    header = _header_text(params.config, vocab_digests, extra)
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header]
    chunks.append(struct.pack("<I", len(params)))
    for name, node in params.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", node.value.ndim))
        chunks.append(struct.pack(f"<{node.value.ndim}I", *node.shape))
        chunks.append(np.ascontiguousarray(node.value, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def _parse_config(header: Mapping[str, str]) -> ModelConfig:
    values: Dict[str, object] = {}
    for f in fields(ModelConfig):
        raw = header.get(f"model.{f.name}")
        if raw is None:
            raise DataError(f"checkpoint header lacks model.{f.name}")
        if f.name == "dropout_p":
            values[f.name] = float(raw)
        elif f.name in ("method", "granularity", "task"):
            values[f.name] = raw
        else:
            values[f.name] = int(raw)
    return ModelConfig(**values)  # type: ignore[arg-type]


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError(f"{self.path}: truncated checkpoint")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> Tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(
    path: Path, vocab_digests: Optional[Mapping[str, str]] = None
) -> Checkpoint:
    reader = _Reader(Path(path).read_bytes(), Path(path))
    if reader.take(len(MAGIC)) != MAGIC:
        raise DataError(f"{path} is not a stylenlg checkpoint")
    version, header_len = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")

    header: Dict[str, str] = {}
    for line in reader.take(header_len).decode("utf-8").splitlines():
        key, _, value = line.partition("=")
        header[key] = value
    config = _parse_config(header)

    (count,) = reader.unpack("<I")
    nodes: "OrderedDict[str, Node]" = OrderedDict()
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        dims = reader.unpack(f"<{ndim}I")
        size = int(np.prod(dims)) if dims else 1
        value = np.frombuffer(reader.take(8 * size), dtype="<f8").reshape(dims)
        nodes[name] = parameter(value.astype(np.float64), name)
    if reader.pos != len(reader.data):
        raise DataError(f"{path}: trailing bytes after the last parameter")

    checkpoint = Checkpoint(ModelParams(config, nodes), header)
    expected = ModelParams.shapes(config, checkpoint.params.vocab_sizes)
    if {n: nodes[n].shape for n in nodes} != dict(expected):
        raise DataError(f"{path}: parameters do not match model.* settings")
    if vocab_digests is not None:
        checkpoint.verify_vocabs(vocab_digests)
    return checkpoint
