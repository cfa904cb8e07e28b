from .bleu import bleu
from .contrast import (
    DEFAULT_CUES,
    ContrastAccuracy,
    ContrastEvidence,
    ContrastJudgment,
    PolarityTable,
    contrast_accuracy,
    contrast_judge,
)
from .entropy import NgramStats, entropy
from .markers import (
    CorrelationTable,
    MarkerCategory,
    MarkerLexicon,
    marker_correlations,
    marker_counts,
)
from .slots import (
    Alignment,
    SlotErrorCounts,
    SlotLexicon,
    SlotStatus,
    align_slots,
    corpus_ser,
    ser,
)
from .stats import Correlation, pearson

__all__ = [
    "DEFAULT_CUES",
    "Alignment",
    "ContrastAccuracy",
    "ContrastEvidence",
    "ContrastJudgment",
    "Correlation",
    "CorrelationTable",
    "MarkerCategory",
    "MarkerLexicon",
    "NgramStats",
    "PolarityTable",
    "SlotErrorCounts",
    "SlotLexicon",
    "SlotStatus",
    "align_slots",
    "bleu",
    "contrast_accuracy",
    "contrast_judge",
    "corpus_ser",
    "entropy",
    "marker_correlations",
    "marker_counts",
    "pearson",
    "ser",
]
