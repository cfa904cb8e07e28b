"""
Contrast judging.

A realization *attempts* a contrast when it contains a contrast cue. The attempt is
*valid* when the two sides of the cue realize MR slots whose values have opposite
polarity in the polarity table. The sides are the clause before and after the cue
within its sentence. A cue that opens a sentence is tried both ways: split at the
next comma ("although X, Y") and against the previous sentence ("X. However, Y").
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from ..errors import DataError
from ..mr import MeaningRepresentation
from ..textpipe import SENTENCE_FINAL, TokenSequence
from .slots import SlotLexicon, SlotOccurrence, Text, find_occurrences, text_tokens

POLARITY_PATH = Path(__file__).with_name("data") / "polarity.tsv"

DEFAULT_CUES: FrozenSet[str] = frozenset({"but", "although", "however", "yet"})

Realized = Tuple[str, str]
Span = Tuple[int, int]


class PolarityTable:
    def __init__(self, entries: Dict[Realized, int]) -> None:
        self._entries = {
            (slot, value.lower()): sign for (slot, value), sign in entries.items()
        }

    def polarity(self, slot_type: str, value: str) -> Optional[int]:
        """+1, -1, or None for values without polarity."""
        return self._entries.get((slot_type, value.lower()))

    def __len__(self) -> int:
        return len(self._entries)

    @classmethod
    def parse(cls, text: str, source: str = "<polarity>") -> "PolarityTable":
        entries: Dict[Realized, int] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2].strip() not in ("+", "-"):
                raise DataError(
                    f"{source}:{lineno}: expected <slot> TAB <value> TAB +|-"
                )
            slot, value, sign = (p.strip() for p in parts)
            entries[(slot, value)] = 1 if sign == "+" else -1
        return cls(entries)

    @classmethod
    def load(cls, path: Path) -> "PolarityTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"), str(path))

    @classmethod
    def default(cls) -> "PolarityTable":
        return _default_table()


@lru_cache(maxsize=None)
def _default_table() -> PolarityTable:
    return PolarityTable.load(POLARITY_PATH)


@dataclass(frozen=True)
class ContrastEvidence:
    cue: str
    left: Optional[Realized] = None
    right: Optional[Realized] = None


@dataclass(frozen=True)
class ContrastJudgment:
    attempted: bool
    valid: bool
    evidence: Optional[ContrastEvidence] = None

    def __post_init__(self) -> None:
        if self.valid and not self.attempted:
            raise ValueError("a contrast cannot be valid without being attempted")


def _sentence(tokens: Sequence[str], at: int) -> Tuple[int, int]:
    start = at
    while start > 0 and tokens[start - 1] not in SENTENCE_FINAL:
        start -= 1
    end = at
    while end < len(tokens) and tokens[end] not in SENTENCE_FINAL:
        end += 1
    return start, end


def _sides(tokens: Sequence[str], at: int) -> List[Tuple[Span, Span]]:
    """Candidate (left, right) token spans a cue at `at` joins."""
    start, end = _sentence(tokens, at)
    if at > start:
        return [((start, at), (at + 1, end))]

    # cue opens the sentence; "However, Y" skips its own comma
    body = at + 2 if at + 1 < end and tokens[at + 1] == "," else at + 1
    pairs: List[Tuple[Span, Span]] = []
    comma = next((i for i in range(body, end) if tokens[i] == ","), None)
    if comma is not None and comma > body:
        pairs.append(((body, comma), (comma + 1, end)))
    if start > 0:
        pairs.append((_sentence(tokens, start - 1), (body, end)))
    return pairs


def _within(occurrences: Iterable[SlotOccurrence], span: Span) -> List[SlotOccurrence]:
    lo, hi = span
    return [o for o in occurrences if o.start >= lo and o.end <= hi]


def contrast_judge(
    mr: MeaningRepresentation,
    text: Text,
    polarity: Optional[PolarityTable] = None,
    lexicon: Optional[SlotLexicon] = None,
    cues: Iterable[str] = DEFAULT_CUES,
) -> ContrastJudgment:
    polarity = polarity if polarity is not None else PolarityTable.default()
    lexicon = lexicon if lexicon is not None else SlotLexicon.default()
    cue_set = {c.lower() for c in cues}
    tokens = text_tokens(text)

    positions = [i for i, tok in enumerate(tokens) if tok in cue_set]
    if not positions:
        return ContrastJudgment(False, False)

    # only correct realizations of MR slots count
    own = {
        lexicon.canonical_slot(sv.slot_type): lexicon.canonical_value(
            sv.slot_type, sv.slot_value
        ).lower()
        for sv in mr.slots
    }
    realized = [
        o
        for o in find_occurrences(mr, TokenSequence(tokens), lexicon)
        if own.get(o.slot_type) == o.value.lower()
        and polarity.polarity(o.slot_type, o.value) is not None
    ]

    sign = {id(o): polarity.polarity(o.slot_type, o.value) for o in realized}

    for at in positions:
        for left, right in _sides(tokens, at):
            pairs = product(_within(realized, left), _within(realized, right))
            for a, b in pairs:
                if a.slot_type != b.slot_type and sign[id(a)] != sign[id(b)]:
                    evidence = ContrastEvidence(
                        tokens[at], (a.slot_type, a.value), (b.slot_type, b.value)
                    )
                    return ContrastJudgment(True, True, evidence)
    return ContrastJudgment(True, False, ContrastEvidence(tokens[positions[0]]))


@dataclass(frozen=True)
class ContrastAccuracy:
    accuracy: float
    attempts: int
    valid: int
    # no attempts at all: accuracy is reported as 0 but means "undefined"
    flagged: bool = False


def contrast_accuracy(judgments: Iterable[ContrastJudgment]) -> ContrastAccuracy:
    """Valid contrasts over attempted ones."""
    attempts = valid = 0
    for judgment in judgments:
        attempts += judgment.attempted
        valid += judgment.valid
    if attempts == 0:
        return ContrastAccuracy(0.0, 0, 0, flagged=True)
    return ContrastAccuracy(valid / attempts, attempts, valid)


__all__ = [
    "DEFAULT_CUES",
    "ContrastAccuracy",
    "ContrastEvidence",
    "ContrastJudgment",
    "PolarityTable",
    "contrast_accuracy",
    "contrast_judge",
]
