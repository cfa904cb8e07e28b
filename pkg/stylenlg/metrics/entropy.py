"""Shannon entropy over pooled uni-, bi- and trigrams."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Tuple, Union

import numpy as np
from nltk.util import ngrams
from scipy import stats

from ..errors import EmptyCorpus
from ..textpipe import TokenSequence, tokenize

ORDERS = (1, 2, 3)

Text = Union[str, TokenSequence]


@dataclass
class NgramStats:
    counts: "Counter[Tuple[str, ...]]" = field(default_factory=Counter)

    @classmethod
    def from_corpus(
        cls, corpus: Iterable[Text], orders: Sequence[int] = ORDERS
    ) -> "NgramStats":
        counts: "Counter[Tuple[str, ...]]" = Counter()
        for text in corpus:
            if isinstance(text, TokenSequence):
                tokens = text.tokens
            elif text.strip():
                tokens = tokenize(text).tokens
            else:
                continue
            for n in orders:
                counts.update(ngrams(tokens, n))
        return cls(counts)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def entropy(self) -> float:
        """`-sum (k/N) log2 (k/N)` over every distinct n-gram of every order."""
        if not self.counts:
            raise EmptyCorpus("no n-grams to compute entropy over")
        return float(stats.entropy(np.fromiter(self.counts.values(), float), base=2))

    def __add__(self, other: "NgramStats") -> "NgramStats":
        return NgramStats(self.counts + other.counts)


def entropy(corpus: Sequence[Text]) -> float:
    if not corpus:
        raise EmptyCorpus("entropy needs a non-empty corpus")
    return NgramStats.from_corpus(corpus).entropy()
