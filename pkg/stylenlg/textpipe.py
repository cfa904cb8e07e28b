"""
Tokenization, delexicalization / relexicalization and vocabularies.

Models are trained on lower-cased references whose open-class values (by default
`name` and `near`) are replaced with `__SLOTTYPE__` placeholders. Generated text is
relexicalized and re-capitalized by rule.
"""
from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
)

from .errors import EmptyInput, UnknownPlaceholder
from .mr import DatasetRecord, MeaningRepresentation

DEFAULT_DELEX_SLOTS: FrozenSet[str] = frozenset({"name", "near"})

PUNCTUATION = ".,!?;:'"
SENTENCE_FINAL = {".", "!", "?"}
_TOKEN_RE = re.compile(r"[.,!?;:']|[^\s.,!?;:']+")
_PLACEHOLDER_RE = re.compile(r"^__[A-Z0-9_]+__$")
_NOT_PLACEHOLDER_CHAR_RE = re.compile(r"[^A-Z0-9_]")

PAD, BOS, EOS, UNK = "<pad>", "<s>", "</s>", "<unk>"
RESERVED = (PAD, BOS, EOS, UNK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)


@dataclass(frozen=True)
class TokenSequence:
    tokens: Tuple[str, ...]

    def __post_init__(self) -> None:
        if any(not tok for tok in self.tokens):
            raise EmptyInput("token sequences cannot contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)

    def __str__(self) -> str:
        return " ".join(self.tokens)


def tokenize(text: str) -> TokenSequence:
    """
    Lowercases, splits on whitespace and separates the punctuation marks `.,!?;:'`
    into standalone tokens.
    """
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise EmptyInput("nothing to tokenize")
    return TokenSequence(tuple(tokens))


def detokenize(tokens: Iterable[str]) -> str:
    out = ""
    glue_next = False
    for tok in tokens:
        if not out:
            out = tok
        elif tok == "'" or glue_next or tok in PUNCTUATION:
            out += tok
        else:
            out += " " + tok
        glue_next = tok == "'"
    return out


def placeholder(slot_type: str) -> str:
    """`customer rating` and `customer-rating` both become `__CUSTOMER_RATING__`."""
    name = _NOT_PLACEHOLDER_CHAR_RE.sub("_", slot_type.upper())
    return f"__{name}__"


def is_placeholder(token: str) -> bool:
    return bool(_PLACEHOLDER_RE.match(token))


@dataclass(frozen=True)
class DelexMap:
    """Ordered (placeholder, slot type, original surface string) triples."""

    placeholders: Tuple[Tuple[str, str, str], ...] = ()
    unmatched: FrozenSet[str] = frozenset()

    def __post_init__(self) -> None:
        names = [p for p, _, _ in self.placeholders]
        if len(set(names)) != len(names) or not all(map(is_placeholder, names)):
            raise UnknownPlaceholder(f"invalid placeholder set {names}")

    def surface(self, token: str) -> str:
        for name, _, original in self.placeholders:
            if name == token:
                return original
        raise UnknownPlaceholder(f"no value recorded for {token}")


def _find_span(tokens: List[str], span: Sequence[str], taken: List[bool]) -> int:
    n = len(span)
    for i in range(len(tokens) - n + 1):
        if tokens[i : i + n] == list(span) and not any(taken[i : i + n]):
            return i
    return -1


def delexicalize(
    mr: MeaningRepresentation,
    ref: TokenSequence,
    slots: Iterable[str] = DEFAULT_DELEX_SLOTS,
) -> Tuple[TokenSequence, DelexMap]:
    """
    Replaces every occurrence of each configured slot's value with its placeholder.
    Longer values are replaced first; within a value, occurrences are taken left to
    right. Slots whose value never occurs are reported as unmatched.
    """
    configured = set(slots)
    candidates = [
        (sv.slot_type, sv.slot_value, tokenize(sv.slot_value).tokens)
        for sv in mr.slots
        if sv.slot_type in configured
    ]
    candidates.sort(key=lambda c: (-len(c[2]), c[0]))

    tokens = list(ref.tokens)
    taken = [False] * len(tokens)
    spans: List[Tuple[int, int, str]] = []
    recorded: List[Tuple[str, str, str]] = []
    unmatched = set()

    for slot_type, original, span in candidates:
        found = False
        while True:
            i = _find_span(tokens, span, taken)
            if i < 0:
                break
            found = True
            spans.append((i, len(span), placeholder(slot_type)))
            for j in range(i, i + len(span)):
                taken[j] = True
        if found:
            recorded.append((placeholder(slot_type), slot_type, original))
        else:
            unmatched.add(slot_type)

    starts = {i: (n, name) for i, n, name in spans}
    out: List[str] = []
    i = 0
    while i < len(tokens):
        if i in starts:
            n, name = starts[i]
            out.append(name)
            i += n
        else:
            out.append(tokens[i])
            i += 1

    # keep the map in MR order
    order = {sv.slot_type: k for k, sv in enumerate(mr.slots)}
    recorded.sort(key=lambda p: order[p[1]])
    return TokenSequence(tuple(out)), DelexMap(tuple(recorded), frozenset(unmatched))


def delex_map_for(
    mr: MeaningRepresentation, slots: Iterable[str] = DEFAULT_DELEX_SLOTS
) -> DelexMap:
    configured = set(slots)
    return DelexMap(
        tuple(
            (placeholder(sv.slot_type), sv.slot_type, sv.slot_value)
            for sv in mr.slots
            if sv.slot_type in configured
        )
    )


def source_tokens(
    mr: MeaningRepresentation, slots: Iterable[str] = DEFAULT_DELEX_SLOTS
) -> List[Tuple[str, str]]:
    """Encoder-side (slot type, value) pairs with open-class values delexicalized."""
    configured = set(slots)
    return [
        (
            sv.slot_type,
            placeholder(sv.slot_type)
            if sv.slot_type in configured
            else " ".join(tokenize(sv.slot_value).tokens),
        )
        for sv in mr.slots
    ]


def _capitalize(text: str) -> str:
    return text[:1].upper() + text[1:]


def relexicalize(out: TokenSequence, delex: DelexMap) -> str:
    """
    Substitutes placeholders with their original values, capitalizes the first token
    and every token that follows sentence-final punctuation, and reattaches
    punctuation.
    """
    words: List[str] = []
    capitalize = True
    for tok in out.tokens:
        word = delex.surface(tok) if is_placeholder(tok) else tok
        if capitalize and word not in PUNCTUATION:
            word = _capitalize(word)
            capitalize = False
        if tok in SENTENCE_FINAL:
            capitalize = True
        words.append(word)
    return detokenize(words)


class VocabularyKind(str, Enum):
    SLOT_TYPE = "slot_type"
    SLOT_VALUE = "slot_value"
    TARGET = "target"


class Vocabulary:
    """
    A bijection between strings and integer ids. Ids 0..3 are reserved for PAD, BOS,
    EOS and UNK; everything else is ordered by descending frequency, then
    lexicographically.
    """

    def __init__(
        self, kind: VocabularyKind, entries: Sequence[Tuple[str, int]]
    ) -> None:
        self.kind = kind
        self._itos: List[str] = list(RESERVED)
        self._counts: List[int] = [0] * len(RESERVED)
        for token, count in entries:
            if token in RESERVED:
                continue
            self._itos.append(token)
            self._counts.append(count)
        self._stoi: Dict[str, int] = {tok: i for i, tok in enumerate(self._itos)}
        if len(self._stoi) != len(self._itos):
            raise ValueError("vocabulary entries must be unique")

    def __len__(self) -> int:
        return len(self._itos)

    def __contains__(self, token: object) -> bool:
        return token in self._stoi

    def encode(self, token: str) -> int:
        return self._stoi.get(token, UNK_ID)

    def decode(self, idx: int) -> str:
        return self._itos[idx]

    def encode_all(self, tokens: Iterable[str]) -> List[int]:
        return [self.encode(t) for t in tokens]

    def decode_all(self, ids: Iterable[int]) -> List[str]:
        return [self.decode(i) for i in ids]

    def count(self, token: str) -> int:
        idx = self._stoi.get(token)
        return self._counts[idx] if idx is not None else 0

    def dumps(self) -> str:
        return "".join(
            f"{i}\t{tok}\t{count}\n"
            for i, (tok, count) in enumerate(zip(self._itos, self._counts))
        )

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    def save(self, path: Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: Path, kind: VocabularyKind) -> "Vocabulary":
        entries: List[Tuple[str, int]] = []
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines()
        ):
            idx, token, count = line.split("\t")
            if int(idx) != lineno:
                raise ValueError(f"{path}: ids must be consecutive (line {lineno + 1})")
            entries.append((token, int(count)))
        return cls(kind, entries)


def _items(
    record: DatasetRecord, kind: VocabularyKind, slots: FrozenSet[str]
) -> Iterator[str]:
    if kind is VocabularyKind.SLOT_TYPE:
        yield from record.mr.slot_types
    elif kind is VocabularyKind.SLOT_VALUE:
        yield from (value for _, value in source_tokens(record.mr, slots))
    else:
        for ref in record.references:
            yield from delexicalize(record.mr, tokenize(ref), slots)[0].tokens


def build_vocab(
    corpus: Sequence[DatasetRecord],
    kind: VocabularyKind,
    min_count: int = 1,
    delex_slots: Iterable[str] = DEFAULT_DELEX_SLOTS,
    extra: Optional[Mapping[str, int]] = None,
) -> Vocabulary:
    """
    Counts slot types, (delexicalized) slot values or target tokens over the corpus.
    `extra` adds counts for items the corpus does not spell out, such as the
    pseudo-slots of token supervision.
    """
    if not corpus:
        raise EmptyInput("cannot build a vocabulary from an empty corpus")

    slots = frozenset(delex_slots)
    counts: Counter[str] = Counter()
    for record in corpus:
        counts.update(_items(record, kind, slots))
    if extra:
        counts.update(extra)

    kept = sorted(
        ((tok, n) for tok, n in counts.items() if n >= min_count),
        key=lambda item: (-item[1], item[0]),
    )
    return Vocabulary(kind, kept)
