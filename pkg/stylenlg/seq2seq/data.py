"""Turning dataset records into padded id arrays the model consumes."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ..mr import (
    ConstraintKind,
    DatasetRecord,
    Granularity,
    MeaningRepresentation,
    StyleConstraint,
)
from ..textpipe import (
    BOS_ID,
    DEFAULT_DELEX_SLOTS,
    EOS_ID,
    PAD_ID,
    DelexMap,
    Vocabulary,
    VocabularyKind,
    delex_map_for,
    delexicalize,
    source_tokens,
    tokenize,
)
from .model import Method, ModelConfig, apply_method1, constraint_vector

IntArray = npt.NDArray[np.int64]
FloatArray = npt.NDArray[np.float64]

VOCAB_FILES = {
    VocabularyKind.SLOT_TYPE: "vocab.slot_type.tsv",
    VocabularyKind.SLOT_VALUE: "vocab.slot_value.tsv",
    VocabularyKind.TARGET: "vocab.target.tsv",
}


@dataclass(frozen=True)
class Vocabularies:
    slot_type: Vocabulary
    slot_value: Vocabulary
    target: Vocabulary

    def by_kind(self, kind: VocabularyKind) -> Vocabulary:
        return {
            VocabularyKind.SLOT_TYPE: self.slot_type,
            VocabularyKind.SLOT_VALUE: self.slot_value,
            VocabularyKind.TARGET: self.target,
        }[kind]

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.slot_type), len(self.slot_value), len(self.target)

    def digests(self) -> Dict[str, str]:
        return {kind.value: self.by_kind(kind).digest() for kind in VocabularyKind}

    def save(self, directory: Path) -> None:
        Path(directory).mkdir(parents=True, exist_ok=True)
        for kind, name in VOCAB_FILES.items():
            self.by_kind(kind).save(Path(directory) / name)

    @classmethod
    def load(cls, directory: Path) -> "Vocabularies":
        loaded = {
            kind: Vocabulary.load(Path(directory) / name, kind)
            for kind, name in VOCAB_FILES.items()
        }
        return cls(
            loaded[VocabularyKind.SLOT_TYPE],
            loaded[VocabularyKind.SLOT_VALUE],
            loaded[VocabularyKind.TARGET],
        )


@dataclass(frozen=True)
class PreparedExample:
    """One (MR, constraint, reference) triple as ids; no `target_ids` at test time."""

    type_ids: Tuple[int, ...]
    value_ids: Tuple[int, ...]
    constraint: Tuple[float, ...]
    target_ids: Tuple[int, ...] = ()
    delex: DelexMap = field(default_factory=DelexMap)


@dataclass(frozen=True)
class PreparedDataset:
    train: Sequence[PreparedExample]
    dev: Sequence[PreparedExample]
    vocabs: Vocabularies

    @property
    def longest_reference(self) -> int:
        return max((len(ex.target_ids) - 2 for ex in self.train), default=0)


@dataclass(frozen=True)
class Batch:
    type_ids: IntArray
    value_ids: IntArray
    mask: FloatArray
    constraint: FloatArray
    targets: IntArray
    target_mask: FloatArray

    def __len__(self) -> int:
        return int(self.type_ids.shape[0])


def prepare_example(
    mr: MeaningRepresentation,
    constraint: StyleConstraint,
    vocabs: Vocabularies,
    config: ModelConfig,
    reference: Optional[str] = None,
    delex_slots: Iterable[str] = DEFAULT_DELEX_SLOTS,
) -> PreparedExample:
    slots = frozenset(delex_slots)
    constraint = constraint.for_mode(config.granularity)
    source = mr
    if config.method is Method.M1:
        source = apply_method1(mr, constraint, config.granularity)

    pairs = source_tokens(source, slots)
    vector: Tuple[float, ...] = ()
    if config.method in (Method.M2, Method.M3):
        vector = tuple(float(x) for x in constraint_vector(constraint, config))

    target: Tuple[int, ...] = ()
    delex = delex_map_for(mr, slots)
    if reference is not None:
        tokens, delex = delexicalize(mr, tokenize(reference), slots)
        target = (BOS_ID, *vocabs.target.encode_all(tokens.tokens), EOS_ID)

    return PreparedExample(
        type_ids=tuple(vocabs.slot_type.encode(t) for t, _ in pairs),
        value_ids=tuple(vocabs.slot_value.encode(v) for _, v in pairs),
        constraint=vector,
        target_ids=target,
        delex=delex,
    )


def prepare_records(
    records: Sequence[DatasetRecord],
    vocabs: Vocabularies,
    config: ModelConfig,
    delex_slots: Iterable[str] = DEFAULT_DELEX_SLOTS,
    with_targets: bool = True,
) -> List[PreparedExample]:
    """Training records yield one example per reference; test records one per MR."""
    examples: List[PreparedExample] = []
    for record in records:
        if with_targets:
            examples.extend(
                prepare_example(
                    record.mr, record.constraint, vocabs, config, ref, delex_slots
                )
                for ref in record.references
            )
        else:
            examples.append(
                prepare_example(
                    record.mr, record.constraint, vocabs, config, None, delex_slots
                )
            )
    return examples


def make_batch(examples: Sequence[PreparedExample]) -> Batch:
    b = len(examples)
    n = max(len(ex.type_ids) for ex in examples)
    t = max(len(ex.target_ids) for ex in examples)
    k = len(examples[0].constraint)

    type_ids = np.full((b, n), PAD_ID, dtype=np.int64)
    value_ids = np.full((b, n), PAD_ID, dtype=np.int64)
    mask = np.zeros((b, n))
    targets = np.full((b, t), PAD_ID, dtype=np.int64)
    target_mask = np.zeros((b, t))
    constraint = np.zeros((b, k))

    for i, ex in enumerate(examples):
        m = len(ex.type_ids)
        type_ids[i, :m] = ex.type_ids
        value_ids[i, :m] = ex.value_ids
        mask[i, :m] = 1.0
        targets[i, : len(ex.target_ids)] = ex.target_ids
        target_mask[i, : len(ex.target_ids)] = 1.0
        if k:
            constraint[i] = ex.constraint

    return Batch(type_ids, value_ids, mask, constraint, targets, target_mask)


def method1_vocab_extras(
    records: Sequence[DatasetRecord], kind: VocabularyKind
) -> Dict[str, int]:
    """Counts for the pseudo-slots token supervision adds, at both granularities."""
    extras: Dict[str, int] = {}
    for record in records:
        c = record.constraint
        if c.kind is ConstraintKind.NONE:
            continue
        modes = [Granularity.COARSE]
        if c.fine_params is not None:
            modes.append(Granularity.FINE)
        for mode in modes:
            augmented = apply_method1(record.mr, c, mode)
            for sv in augmented.slots[: len(augmented) - len(record.mr)]:
                is_type = kind is VocabularyKind.SLOT_TYPE
                item = sv.slot_type if is_type else sv.slot_value
                extras[item] = extras.get(item, 0) + 1
    return extras


__all__ = [
    "Batch",
    "PreparedDataset",
    "PreparedExample",
    "Vocabularies",
    "make_batch",
    "method1_vocab_extras",
    "prepare_example",
    "prepare_records",
]
