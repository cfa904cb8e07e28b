"""Corpus-level multi-reference BLEU-4."""
from __future__ import annotations

from typing import List, Optional, Sequence, Union

from sacrebleu.metrics import BLEU

from ..errors import DataError, EmptyCorpus
from ..textpipe import TokenSequence, tokenize

Text = Union[str, TokenSequence]


def _line(text: Text) -> str:
    if isinstance(text, TokenSequence):
        return str(text)
    return str(tokenize(text)) if text.strip() else ""


def bleu(
    outputs: Sequence[Text],
    references: Sequence[Sequence[Text]],
    smooth: bool = False,
) -> float:
    """
    Modified 1-4-gram precisions pooled over the corpus, geometric mean times the
    brevity penalty against the closest reference length. Inputs are compared as
    lowercased tokens; the score is on a 0-100 scale. Unsmoothed unless `smooth`.
    """
    if not outputs:
        raise EmptyCorpus("BLEU needs at least one output")
    if len(outputs) != len(references):
        raise DataError(
            f"{len(outputs)} outputs but {len(references)} reference sets"
        )
    if any(not refs for refs in references):
        raise DataError("every output needs at least one reference")

    width = max(len(refs) for refs in references)
    # one stream per reference slot; outputs with fewer references are padded
    streams: List[List[Optional[str]]] = [
        [_line(refs[k]) if k < len(refs) else None for refs in references]
        for k in range(width)
    ]
    metric = BLEU(
        tokenize="none",
        smooth_method="exp" if smooth else "none",
        effective_order=True,
        force=True,
    )
    hypotheses = [_line(o) for o in outputs]
    return float(metric.corpus_score(hypotheses, streams).score)  # type: ignore[arg-type]
