"""
Rule-based slot alignment and slot error rate.

A realization is scanned for every phrase the lexicon knows plus the literal values
of the MR. Longer phrases win and matches never overlap; at equal length a phrase
that realizes the MR's own value wins. For each MR slot the aligner then counts
correct and wrong-value occurrences:

- at least one correct occurrence: the slot is realized,
- only wrong values: a substitution,
- nothing at all: a deletion.

Every occurrence beyond the first is a repeat (except for repeat-exempt slots such as
`name`). Each lexicon slot type that is realized but absent from the MR counts as
one hallucination.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from ..errors import DataError, EmptyCorpus, EmptyInput
from ..mr import MeaningRepresentation
from ..textpipe import TokenSequence, is_placeholder, placeholder, tokenize

LEXICON_PATH = Path(__file__).with_name("data") / "slot_lexicon.tsv"

Text = Union[str, TokenSequence]


def text_tokens(text: Text) -> Tuple[str, ...]:
    if isinstance(text, TokenSequence):
        tokens = text.tokens
    else:
        try:
            tokens = tokenize(text).tokens
        except EmptyInput:
            return ()
    # placeholders may have been lowercased on the way
    return tuple(t.upper() if is_placeholder(t.upper()) else t for t in tokens)


def _phrase(text: str) -> Tuple[str, ...]:
    return tokenize(text).tokens


@dataclass(frozen=True)
class ValueEntry:
    slot_type: str
    value: str
    spellings: FrozenSet[str]
    phrases: Tuple[Tuple[str, ...], ...]


class SlotLexicon:
    """Surface phrases per (slot, value), slot-type aliases and repeat-exempt slots."""

    def __init__(
        self,
        entries: Sequence[ValueEntry],
        aliases: Optional[Mapping[str, str]] = None,
        repeat_exempt: Iterable[str] = (),
    ) -> None:
        self.entries = tuple(entries)
        self._aliases: Dict[str, str] = {
            k.lower(): v for k, v in (aliases or {}).items()
        }
        for entry in self.entries:
            self._aliases.setdefault(entry.slot_type.lower(), entry.slot_type)
        self.repeat_exempt = frozenset(repeat_exempt)

    @property
    def slot_types(self) -> FrozenSet[str]:
        return frozenset(e.slot_type for e in self.entries)

    def canonical_slot(self, slot_type: str) -> str:
        return self._aliases.get(slot_type.strip().lower(), slot_type.strip())

    def entry_for(self, slot_type: str, value: str) -> Optional[ValueEntry]:
        slot, spelled = self.canonical_slot(slot_type), value.strip().lower()
        for entry in self.entries:
            if entry.slot_type == slot and spelled in entry.spellings:
                return entry
        return None

    def canonical_value(self, slot_type: str, value: str) -> str:
        entry = self.entry_for(slot_type, value)
        return entry.value if entry is not None else value.strip()

    @classmethod
    def parse(cls, text: str, source: str = "<lexicon>") -> "SlotLexicon":
        entries: List[ValueEntry] = []
        aliases: Dict[str, str] = {}
        exempt: List[str] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            kind, *rest = line.rstrip("\n").split("\t")
            if kind == "alias" and len(rest) == 2:
                aliases[rest[0]] = rest[1]
            elif kind == "repeat-exempt" and len(rest) == 1:
                exempt.append(rest[0])
            elif kind == "value" and len(rest) == 3:
                slot, spellings, phrases = rest
                names = [s.strip() for s in spellings.split("|") if s.strip()]
                if not names:
                    raise DataError(f"{source}:{lineno}: a value needs a spelling")
                entries.append(
                    ValueEntry(
                        slot,
                        names[0],
                        frozenset(s.lower() for s in names),
                        tuple(_phrase(p) for p in phrases.split("|") if p.strip()),
                    )
                )
            else:
                raise DataError(f"{source}:{lineno}: cannot parse {line!r}")
        return cls(entries, aliases, exempt)

    @classmethod
    def load(cls, path: Path) -> "SlotLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"), str(path))

    @classmethod
    def default(cls) -> "SlotLexicon":
        return _default_lexicon()


@lru_cache(maxsize=None)
def _default_lexicon() -> SlotLexicon:
    return SlotLexicon.load(LEXICON_PATH)


@dataclass(frozen=True)
class SlotOccurrence:
    start: int
    end: int
    slot_type: str
    value: str


def _find_all(
    tokens: Sequence[str], phrase: Sequence[str], taken: List[bool]
) -> Iterable[int]:
    n = len(phrase)
    i = 0
    while i <= len(tokens) - n:
        if tuple(tokens[i : i + n]) == tuple(phrase) and not any(taken[i : i + n]):
            yield i
            i += n
        else:
            i += 1


def find_occurrences(
    mr: MeaningRepresentation, text: Text, lexicon: Optional[SlotLexicon] = None
) -> List[SlotOccurrence]:
    """Every slot realization in `text`, in text order, with canonical slot and value."""
    lexicon = lexicon or SlotLexicon.default()
    tokens = text_tokens(text)

    # (phrase, slot, value, priority): priority 0 realizes the MR's own value
    candidates: List[Tuple[Tuple[str, ...], str, str, int]] = []
    own_entries = set()
    for sv in mr.slots:
        slot = lexicon.canonical_slot(sv.slot_type)
        entry = lexicon.entry_for(sv.slot_type, sv.slot_value)
        value = entry.value if entry is not None else sv.slot_value.strip()
        candidates.append(((placeholder(sv.slot_type),), slot, value, 0))
        if entry is not None:
            own_entries.add(id(entry))
            candidates.extend((p, slot, value, 0) for p in entry.phrases)
        else:
            try:
                candidates.append((_phrase(sv.slot_value), slot, value, 0))
            except EmptyInput:
                pass
    for entry in lexicon.entries:
        if id(entry) not in own_entries:
            candidates.extend(
                (p, entry.slot_type, entry.value, 1) for p in entry.phrases
            )

    candidates.sort(key=lambda c: (-len(c[0]), c[3], c[1], c[2], c[0]))
    taken = [False] * len(tokens)
    found: List[SlotOccurrence] = []
    for phrase, slot, value, _ in candidates:
        for i in list(_find_all(tokens, phrase, taken)):
            for j in range(i, i + len(phrase)):
                taken[j] = True
            found.append(SlotOccurrence(i, i + len(phrase), slot, value))
    found.sort(key=lambda o: o.start)
    return found


class SlotStatus(str, Enum):
    CORRECT = "correct"
    WRONG_VALUE = "wrong_value"
    ABSENT = "absent"


@dataclass(frozen=True)
class SlotMatch:
    slot_type: str
    value: str
    status: SlotStatus
    correct: int
    wrong: Tuple[str, ...]
    repeats: int


@dataclass(frozen=True)
class Alignment:
    slots: Tuple[SlotMatch, ...]
    hallucinated: Tuple[str, ...]
    occurrences: Tuple[SlotOccurrence, ...]

    def status(self, slot_type: str) -> SlotStatus:
        for match in self.slots:
            if match.slot_type == slot_type:
                return match.status
        raise KeyError(slot_type)


def align_slots(
    mr: MeaningRepresentation, text: Text, lexicon: Optional[SlotLexicon] = None
) -> Alignment:
    lexicon = lexicon or SlotLexicon.default()
    occurrences = find_occurrences(mr, text, lexicon)

    matches: List[SlotMatch] = []
    mr_slots = set()
    for sv in mr.slots:
        slot = lexicon.canonical_slot(sv.slot_type)
        value = lexicon.canonical_value(sv.slot_type, sv.slot_value)
        mr_slots.add(slot)
        mine = [o for o in occurrences if o.slot_type == slot]
        correct = sum(1 for o in mine if o.value.lower() == value.lower())
        wrong = tuple(o.value for o in mine if o.value.lower() != value.lower())

        if correct:
            status = SlotStatus.CORRECT
        elif wrong:
            status = SlotStatus.WRONG_VALUE
        else:
            status = SlotStatus.ABSENT
        repeats = 0 if slot in lexicon.repeat_exempt else max(len(mine) - 1, 0)
        matches.append(SlotMatch(sv.slot_type, value, status, correct, wrong, repeats))

    hallucinated = sorted(
        {o.slot_type for o in occurrences if o.slot_type not in mr_slots}
    )
    return Alignment(tuple(matches), tuple(hallucinated), tuple(occurrences))


@dataclass(frozen=True)
class SlotErrorCounts:
    substitutions: int = 0
    deletions: int = 0
    repeats: int = 0
    hallucinations: int = 0
    slots: int = 1

    def __post_init__(self) -> None:
        if min(self.as_tuple()[:4]) < 0:
            raise ValueError("slot error counts cannot be negative")
        if self.slots < 1:
            raise ValueError("slot error counts need at least one slot")

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.repeats + self.hallucinations

    @property
    def ser(self) -> float:
        """May exceed 1: repeats and hallucinations are not bounded by the slot count."""
        return self.errors / self.slots

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (
            self.substitutions,
            self.deletions,
            self.repeats,
            self.hallucinations,
            self.slots,
        )

    def __add__(self, other: "SlotErrorCounts") -> "SlotErrorCounts":
        return SlotErrorCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.repeats + other.repeats,
            self.hallucinations + other.hallucinations,
            self.slots + other.slots,
        )


def counts_from_alignment(alignment: Alignment) -> SlotErrorCounts:
    return SlotErrorCounts(
        substitutions=sum(m.status is SlotStatus.WRONG_VALUE for m in alignment.slots),
        deletions=sum(m.status is SlotStatus.ABSENT for m in alignment.slots),
        repeats=sum(m.repeats for m in alignment.slots),
        hallucinations=len(alignment.hallucinated),
        slots=len(alignment.slots),
    )


def ser(
    mr: MeaningRepresentation, text: Text, lexicon: Optional[SlotLexicon] = None
) -> Tuple[SlotErrorCounts, float]:
    counts = counts_from_alignment(align_slots(mr, text, lexicon))
    return counts, counts.ser


def corpus_ser(
    pairs: Iterable[Tuple[MeaningRepresentation, Text]],
    lexicon: Optional[SlotLexicon] = None,
) -> SlotErrorCounts:
    """Pooled counts; `.ser` of the result is total errors over total slots."""
    total: Optional[SlotErrorCounts] = None
    for mr, text in pairs:
        counts, _ = ser(mr, text, lexicon)
        total = counts if total is None else total + counts
    if total is None:
        raise EmptyCorpus("cannot compute SER over an empty corpus")
    return total
