"""
Stylistic marker counting and the per-personality marker correlations.

Markers are read from a versioned lexicon (`data/markers.tsv`). For every
personality the mean count of each marker per output is computed once for model
outputs and once for reference texts; the Pearson correlation between the two mean
vectors (over the markers of one category) measures how well a model reproduces
that personality's style.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import (
    DefaultDict,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from ..errors import DataError, EmptyInput, UnknownPersonalityLabel, ZeroVariance
from ..mr import Personality
from ..textpipe import SENTENCE_FINAL, TokenSequence, tokenize
from .slots import text_tokens
from .stats import Correlation, pearson

MARKERS_PATH = Path(__file__).with_name("data") / "markers.tsv"

Text = Union[str, TokenSequence]
Label = Union[str, Personality]


class MarkerCategory(str, Enum):
    AGGREGATION = "aggregation"
    PRAGMATIC = "pragmatic"


@dataclass(frozen=True)
class MarkerPattern:
    tokens: Tuple[str, ...]
    anchored: bool = False

    def matches(self, tokens: Sequence[str], at: int) -> bool:
        if self.anchored and at > 0 and tokens[at - 1] not in SENTENCE_FINAL:
            return False
        return tuple(tokens[at : at + len(self.tokens)]) == self.tokens


@dataclass(frozen=True)
class Marker:
    name: str
    category: MarkerCategory
    patterns: Tuple[MarkerPattern, ...]

    def count(self, tokens: Sequence[str]) -> int:
        ordered = sorted(self.patterns, key=lambda p: -len(p.tokens))
        found, i = 0, 0
        while i < len(tokens):
            hit = next((p for p in ordered if p.matches(tokens, i)), None)
            if hit is None:
                i += 1
            else:
                found += 1
                i += len(hit.tokens)
        return found


class MarkerLexicon:
    def __init__(self, markers: Sequence[Marker] = ()) -> None:
        names = [m.name for m in markers]
        if len(set(names)) != len(names):
            raise DataError("marker names must be unique")
        self.markers = tuple(markers)

    def names(self, category: Optional[MarkerCategory] = None) -> List[str]:
        return [
            m.name for m in self.markers if category is None or m.category is category
        ]

    def count(self, text: Text) -> Dict[str, int]:
        """Occurrences of every marker in one text."""
        tokens = text_tokens(text)
        return {m.name: m.count(tokens) for m in self.markers}

    @classmethod
    def parse(cls, text: str, source: str = "<markers>") -> "MarkerLexicon":
        markers: List[Marker] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{source}:{lineno}: expected 3 tab-separated fields")
            name, category, raw = parts
            try:
                kind = MarkerCategory(category.strip())
            except ValueError:
                raise DataError(f"{source}:{lineno}: unknown category {category!r}")

            patterns = []
            for pattern in raw.split("|"):
                anchored = pattern.startswith("^")
                try:
                    tokens = tokenize(pattern.lstrip("^")).tokens
                except EmptyInput:
                    raise DataError(f"{source}:{lineno}: empty pattern in {name}")
                patterns.append(MarkerPattern(tokens, anchored))
            markers.append(Marker(name.strip(), kind, tuple(patterns)))
        return cls(markers)

    @classmethod
    def load(cls, path: Path) -> "MarkerLexicon":
        return cls.parse(Path(path).read_text(encoding="utf-8"), str(path))

    @classmethod
    def default(cls) -> "MarkerLexicon":
        return _default_markers()


@lru_cache(maxsize=None)
def _default_markers() -> MarkerLexicon:
    return MarkerLexicon.load(MARKERS_PATH)


def personality_of(label: Label) -> Personality:
    if isinstance(label, Personality):
        return label
    try:
        return Personality.parse(label)
    except ValueError:
        raise UnknownPersonalityLabel(f"unknown personality {label!r}")


MarkerMeans = Dict[Personality, Dict[str, float]]


def marker_counts(
    outputs: Iterable[Tuple[Label, Text]], lexicon: Optional[MarkerLexicon] = None
) -> MarkerMeans:
    """Mean occurrences per output of every marker, for each personality seen."""
    lexicon = lexicon if lexicon is not None else MarkerLexicon.default()
    sums: DefaultDict[Personality, Dict[str, int]] = defaultdict(
        lambda: dict.fromkeys(lexicon.names(), 0)
    )
    seen: DefaultDict[Personality, int] = defaultdict(int)

    for label, text in outputs:
        personality = personality_of(label)
        totals = sums[personality]
        for name, k in lexicon.count(text).items():
            totals[name] += k
        seen[personality] += 1

    return {
        p: {name: total / seen[p] for name, total in sums[p].items()}
        for p in Personality
        if seen[p]
    }


@dataclass(frozen=True)
class CorrelationTable:
    """One correlation per personality plus their mean r."""

    category: MarkerCategory
    rows: Dict[Personality, Correlation] = field(default_factory=dict)
    flagged: Tuple[Personality, ...] = ()

    @property
    def average(self) -> float:
        if not self.rows:
            return 0.0
        return sum(c.r for c in self.rows.values()) / len(self.rows)

    def as_dict(self) -> Dict[str, object]:
        return {
            "category": self.category.value,
            "rows": {
                p.value: {"r": c.r, "p_value": c.p_value, "n": c.n}
                for p, c in self.rows.items()
            },
            "average": self.average,
            "flagged": [p.value for p in self.flagged],
        }


def marker_correlations(
    model: Mapping[Personality, Mapping[str, float]],
    reference: Mapping[Personality, Mapping[str, float]],
    category: MarkerCategory,
    lexicon: Optional[MarkerLexicon] = None,
) -> CorrelationTable:
    """
    Pearson r between model and reference mean counts over the markers of
    `category`, for every personality present on both sides. A constant vector on
    either side gives r=0, p=1 and flags the personality.
    """
    lexicon = lexicon if lexicon is not None else MarkerLexicon.default()
    names = lexicon.names(category)
    rows: Dict[Personality, Correlation] = {}
    flagged: List[Personality] = []
    for personality in Personality:
        if personality not in model or personality not in reference:
            continue
        xs = [model[personality].get(n, 0.0) for n in names]
        ys = [reference[personality].get(n, 0.0) for n in names]
        try:
            rows[personality] = pearson(xs, ys)
        except ZeroVariance:
            rows[personality] = Correlation(0.0, 1.0, len(names))
            flagged.append(personality)
    return CorrelationTable(category, rows, tuple(flagged))


__all__ = [
    "CorrelationTable",
    "Marker",
    "MarkerCategory",
    "MarkerLexicon",
    "MarkerMeans",
    "MarkerPattern",
    "marker_correlations",
    "marker_counts",
    "personality_of",
]
