"""
Experiment reports: one row of automatic metrics per model output file, laid out
as the personality table (BLEU, SER, H, AGG, PRAG) or the contrast table (BLEU,
SER, H, contrast accuracy, attempts).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .config import MetricOptions
from .errors import DataError, UnknownPersonalityLabel
from .metrics import (
    ContrastJudgment,
    CorrelationTable,
    MarkerCategory,
    MarkerLexicon,
    PolarityTable,
    SlotLexicon,
    bleu,
    contrast_accuracy,
    contrast_judge,
    corpus_ser,
    entropy,
    marker_correlations,
    marker_counts,
)
from .mr import ConstraintKind, DatasetRecord
from .seq2seq.model import Task

COLUMNS = {
    Task.PERSONALITY: ("bleu", "ser", "entropy", "agg", "prag"),
    Task.CONTRAST: ("bleu", "ser", "entropy", "contrast_accuracy", "attempts"),
}
HEADERS = {
    "bleu": "BLEU",
    "ser": "SER",
    "entropy": "H",
    "agg": "AGG",
    "prag": "PRAG",
    "contrast_accuracy": "ACC",
    "attempts": "ATTEMPTS",
}


@dataclass(frozen=True)
class MetricResources:
    slots: SlotLexicon
    polarity: PolarityTable
    markers: MarkerLexicon
    cues: Tuple[str, ...]
    smooth_bleu: bool = False

    @classmethod
    def from_options(cls, options: MetricOptions) -> "MetricResources":
        return cls(
            SlotLexicon.load(Path(options.slot_lexicon))
            if options.slot_lexicon
            else SlotLexicon.default(),
            PolarityTable.load(Path(options.polarity_table))
            if options.polarity_table
            else PolarityTable.default(),
            MarkerLexicon.load(Path(options.marker_lexicon))
            if options.marker_lexicon
            else MarkerLexicon.default(),
            options.contrast_cues,
            options.smooth_bleu,
        )


@dataclass(frozen=True)
class ReportRow:
    name: str
    size: int
    bleu: Optional[float] = None
    ser: Optional[float] = None
    entropy: Optional[float] = None
    agg: Optional[float] = None
    prag: Optional[float] = None
    contrast_accuracy: Optional[float] = None
    attempts: Optional[int] = None
    # no contrast attempted, so the accuracy is undefined
    accuracy_flagged: bool = False


@dataclass
class ExperimentReport:
    task: Task
    fingerprint: str
    seed: int
    rows: List[ReportRow] = field(default_factory=list)
    correlations: Dict[str, List[CorrelationTable]] = field(default_factory=dict)

    @property
    def columns(self) -> Tuple[str, ...]:
        return COLUMNS[self.task]

    def records(self) -> Iterator[Dict[str, object]]:
        yield {
            "kind": "meta",
            "task": self.task.value,
            "fingerprint": self.fingerprint,
            "seed": self.seed,
        }
        for row in self.rows:
            values = asdict(row)
            yield {
                "kind": "row",
                "name": row.name,
                "size": row.size,
                **{col: values[col] for col in self.columns},
                "accuracy_flagged": row.accuracy_flagged,
            }
        for name, tables in self.correlations.items():
            for table in tables:
                yield {"kind": "correlation", "name": name, **table.as_dict()}

    def write(self, path: Path) -> None:
        Path(path).write_text(
            "".join(
                json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n"
                for rec in self.records()
            ),
            encoding="utf-8",
        )

    def render(self) -> str:
        """The report as plain-text tables."""
        width = max([len("model")] + [len(r.name) for r in self.rows])
        head = "  ".join(
            ["model".ljust(width)] + [HEADERS[c].rjust(9) for c in self.columns]
        )
        lines = [head, "-" * len(head)]
        for row in self.rows:
            values = asdict(row)
            cells = [_cell(values[c], c) for c in self.columns]
            lines.append("  ".join([row.name.ljust(width)] + cells))

        for name, tables in self.correlations.items():
            for table in tables:
                lines.append("")
                lines.append(f"{name}: {table.category.value} marker correlations")
                for personality, corr in table.rows.items():
                    flag = "  (constant counts)" if personality in table.flagged else ""
                    lines.append(
                        f"  {personality.value:<16}r={corr.r:+.3f}"
                        f"  p={corr.p_value:.3g}{flag}"
                    )
                lines.append(f"  {'average':<16}r={table.average:+.3f}")
        return "\n".join(lines)


def _cell(value: object, column: str) -> str:
    if value is None:
        return "-".rjust(9)
    if column == "attempts":
        return str(value).rjust(9)
    if column in ("bleu", "entropy"):
        return f"{value:.2f}".rjust(9)
    return f"{value:.3f}".rjust(9)


def _references(records: Sequence[DatasetRecord]) -> List[List[str]]:
    return [list(r.references) for r in records]


def _personality_row(
    name: str,
    outputs: Sequence[str],
    records: Sequence[DatasetRecord],
    res: MetricResources,
) -> Tuple[ReportRow, List[CorrelationTable]]:
    labels = []
    for i, record in enumerate(records, start=1):
        if record.constraint.personality is None:
            raise UnknownPersonalityLabel(f"test record {i} has no personality label")
        labels.append(record.constraint.personality)

    model = marker_counts(zip(labels, outputs), res.markers)
    reference = marker_counts(
        ((label, ref) for label, r in zip(labels, records) for ref in r.references),
        res.markers,
    )
    tables = [
        marker_correlations(model, reference, category, res.markers)
        for category in (MarkerCategory.AGGREGATION, MarkerCategory.PRAGMATIC)
    ]
    row = ReportRow(
        name,
        len(outputs),
        bleu=bleu(outputs, _references(records), res.smooth_bleu),
        ser=corpus_ser(((r.mr, o) for r, o in zip(records, outputs)), res.slots).ser,
        entropy=entropy(outputs),
        agg=tables[0].average,
        prag=tables[1].average,
    )
    return row, tables


def _contrast_row(
    name: str,
    outputs: Sequence[str],
    records: Sequence[DatasetRecord],
    res: MetricResources,
) -> ReportRow:
    judgments: List[ContrastJudgment] = [
        contrast_judge(r.mr, o, res.polarity, res.slots, res.cues)
        for r, o in zip(records, outputs)
    ]
    accuracy = contrast_accuracy(judgments)
    return ReportRow(
        name,
        len(outputs),
        bleu=bleu(outputs, _references(records), res.smooth_bleu),
        ser=corpus_ser(((r.mr, o) for r, o in zip(records, outputs)), res.slots).ser,
        entropy=entropy(outputs),
        contrast_accuracy=accuracy.accuracy,
        attempts=accuracy.attempts,
        accuracy_flagged=accuracy.flagged,
    )


def evaluate_outputs(
    name: str,
    outputs: Sequence[str],
    records: Sequence[DatasetRecord],
    task: Task,
    res: MetricResources,
) -> Tuple[List[ReportRow], List[CorrelationTable]]:
    """
    All automatic metrics for one model. Contrast runs are reported separately on
    the contrastive and the non-contrastive part of the test set.
    """
    if len(outputs) != len(records):
        raise DataError(
            f"{name}: {len(outputs)} outputs for {len(records)} test records"
        )
    if task is Task.PERSONALITY:
        row, tables = _personality_row(name, outputs, records, res)
        return [row], tables

    rows = []
    for wanted, label in ((True, "contrast"), (False, "no contrast")):
        subset = [
            (o, r)
            for o, r in zip(outputs, records)
            if r.constraint.kind is ConstraintKind.CONTRAST
            and r.constraint.contrast is wanted
        ]
        if subset:
            outs, recs = zip(*subset)
            rows.append(_contrast_row(f"{name} [{label}]", outs, recs, res))
    if not rows:
        raise DataError(f"{name}: no test record carries a contrast flag")
    return rows, []


def train_row(records: Sequence[DatasetRecord]) -> ReportRow:
    """Entropy of the training references, the diversity a model could reach."""
    refs = [ref for r in records for ref in r.references]
    return ReportRow("Train", len(refs), entropy=entropy(refs))


__all__ = [
    "COLUMNS",
    "ExperimentReport",
    "MetricResources",
    "ReportRow",
    "evaluate_outputs",
    "train_row",
]
