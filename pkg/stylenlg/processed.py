"""
The processed-data directory that `ingest` writes and every later command reads:

    manifest.json            fingerprint, seed, split sizes, class counts, vocab digests
    train.jsonl / dev.jsonl  records plus their delexicalized references
    test.jsonl               (when a test set was given)
    vocab.*.tsv              the three vocabularies
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

from .errors import ChecksumMismatch, DataError, MissingPath
from .mr import DatasetRecord, dump_record, load_records
from .numerics import RngState
from .seq2seq.data import Vocabularies, method1_vocab_extras
from .textpipe import VocabularyKind, build_vocab, delexicalize, tokenize

MANIFEST = "manifest.json"
SPLITS = ("train", "dev", "test")


@dataclass(frozen=True)
class Manifest:
    fingerprint: str
    seed: int
    delex_slots: Tuple[str, ...]
    min_count: int
    counts: Dict[str, int] = field(default_factory=dict)
    classes: Dict[str, Dict[str, int]] = field(default_factory=dict)
    vocab: Dict[str, str] = field(default_factory=dict)
    longest_reference: int = 0

    def as_dict(self) -> Dict[str, Any]:
        return {
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "delex_slots": list(self.delex_slots),
            "min_count": self.min_count,
            "counts": self.counts,
            "classes": self.classes,
            "vocab": self.vocab,
            "longest_reference": self.longest_reference,
        }

    @classmethod
    def from_dict(cls, obj: Mapping[str, Any]) -> "Manifest":
        try:
            return cls(
                fingerprint=str(obj["fingerprint"]),
                seed=int(obj["seed"]),
                delex_slots=tuple(obj["delex_slots"]),
                min_count=int(obj["min_count"]),
                counts=dict(obj.get("counts", {})),
                classes={k: dict(v) for k, v in obj.get("classes", {}).items()},
                vocab=dict(obj.get("vocab", {})),
                longest_reference=int(obj.get("longest_reference", 0)),
            )
        except (KeyError, TypeError, ValueError) as err:
            raise DataError(f"malformed manifest ({err})") from err


def class_counts(records: Iterable[DatasetRecord]) -> Dict[str, int]:
    """Records per constraint label, e.g. per personality or contrast class."""
    counts = Counter(record.constraint.label for record in records)
    return dict(sorted(counts.items()))


def split_dev(
    records: Sequence[DatasetRecord], fraction: float, rng: RngState
) -> Tuple[List[DatasetRecord], List[DatasetRecord]]:
    """A seeded random `fraction` of the records becomes the dev set; order is kept."""
    size = int(round(len(records) * fraction))
    size = min(size, len(records) - 1)
    if size <= 0:
        return list(records), []
    chosen = set(int(i) for i in rng.generator().permutation(len(records))[:size])
    train = [r for i, r in enumerate(records) if i not in chosen]
    dev = [r for i, r in enumerate(records) if i in chosen]
    return train, dev


def build_vocabularies(
    records: Sequence[DatasetRecord], delex_slots: Iterable[str], min_count: int
) -> Vocabularies:
    """
    The source vocabularies also hold the pseudo-slots of token supervision, so
    one ingested dataset serves every method and granularity.
    """
    slots = frozenset(delex_slots)
    return Vocabularies(
        build_vocab(
            records,
            VocabularyKind.SLOT_TYPE,
            min_count,
            slots,
            method1_vocab_extras(records, VocabularyKind.SLOT_TYPE),
        ),
        build_vocab(
            records,
            VocabularyKind.SLOT_VALUE,
            min_count,
            slots,
            method1_vocab_extras(records, VocabularyKind.SLOT_VALUE),
        ),
        build_vocab(records, VocabularyKind.TARGET, min_count, slots),
    )


def _delexicalized(record: DatasetRecord, slots: Iterable[str]) -> List[str]:
    return [
        str(delexicalize(record.mr, tokenize(ref), slots)[0])
        for ref in record.references
    ]


def _processed_line(record: DatasetRecord, slots: Iterable[str]) -> str:
    obj = json.loads(dump_record(record))
    obj["delex"] = _delexicalized(record, slots)
    return json.dumps(obj, ensure_ascii=False)


@dataclass
class ProcessedData:
    manifest: Manifest
    vocabs: Vocabularies
    splits: Dict[str, List[DatasetRecord]]

    @classmethod
    def build(
        cls,
        train: Sequence[DatasetRecord],
        dev: Sequence[DatasetRecord],
        test: Sequence[DatasetRecord],
        fingerprint: str,
        seed: int,
        delex_slots: Iterable[str],
        min_count: int,
    ) -> "ProcessedData":
        if not train:
            raise DataError("the training set is empty")
        slots = tuple(sorted(set(delex_slots)))
        vocabs = build_vocabularies(train, slots, min_count)
        splits = {"train": list(train), "dev": list(dev), "test": list(test)}
        longest = max(
            len(ref.split()) for r in train for ref in _delexicalized(r, slots)
        )
        manifest = Manifest(
            fingerprint=fingerprint,
            seed=seed,
            delex_slots=slots,
            min_count=min_count,
            counts={name: len(records) for name, records in splits.items()},
            classes={name: class_counts(records) for name, records in splits.items()},
            vocab=vocabs.digests(),
            longest_reference=longest,
        )
        return cls(manifest, vocabs, splits)

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.vocabs.save(directory)
        for name, records in self.splits.items():
            if name == "test" and not records:
                continue
            (directory / f"{name}.jsonl").write_text(
                "".join(
                    _processed_line(r, self.manifest.delex_slots) + "\n"
                    for r in records
                ),
                encoding="utf-8",
            )
        (directory / MANIFEST).write_text(
            json.dumps(self.manifest.as_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, directory: Path) -> "ProcessedData":
        """Reads a processed directory back; vocabularies must match the manifest."""
        directory = Path(directory)
        manifest_path = directory / MANIFEST
        if not manifest_path.is_file():
            raise MissingPath(
                f"'{directory}' holds no processed dataset; run `stylenlg ingest` first"
            )
        try:
            manifest = Manifest.from_dict(
                json.loads(manifest_path.read_text(encoding="utf-8"))
            )
        except json.JSONDecodeError as err:
            raise DataError(f"{manifest_path}: invalid JSON ({err.msg})") from err

        try:
            vocabs = Vocabularies.load(directory)
        except (OSError, ValueError) as err:
            raise DataError(f"cannot read the vocabularies in '{directory}': {err}")
        if vocabs.digests() != manifest.vocab:
            raise ChecksumMismatch(
                f"the vocabularies in '{directory}' do not match its manifest"
            )
        splits = {
            name: load_records(directory / f"{name}.jsonl")
            if (directory / f"{name}.jsonl").is_file()
            else []
            for name in SPLITS
        }
        return cls(manifest, vocabs, splits)


__all__ = [
    "MANIFEST",
    "SPLITS",
    "Manifest",
    "ProcessedData",
    "build_vocabularies",
    "class_counts",
    "split_dev",
]
