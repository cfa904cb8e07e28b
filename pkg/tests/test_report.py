"""Tests the experiment report: metric rows, correlations and rendering."""
import json

import pytest

from stylenlg.config import MetricOptions
from stylenlg.errors import DataError, UnknownPersonalityLabel
from stylenlg.metrics import MarkerCategory
from stylenlg.mr import DatasetRecord, Personality, StyleConstraint, parse_mr
from stylenlg.report import (
    ExperimentReport,
    MetricResources,
    evaluate_outputs,
    train_row,
)
from stylenlg.seq2seq import Task

from .conftest import toy_records

RESOURCES = MetricResources.from_options(MetricOptions())

CONTRAST = [
    (
        "name[Aromi], priceRange[cheap], customerRating[low]",
        True,
        "Aromi is cheap but it has a low customer rating.",
    ),
    (
        "name[Cotto], priceRange[high], familyFriendly[yes]",
        True,
        "Cotto is family friendly, but it is expensive.",
    ),
    (
        "name[Zizzi], priceRange[cheap], customerRating[high]",
        False,
        "Zizzi is cheap and has a high customer rating.",
    ),
]


def _contrast_records():
    return [
        DatasetRecord(parse_mr(mr), StyleConstraint.of_contrast(flag), (ref,))
        for mr, flag, ref in CONTRAST
    ]


def test_references_score_perfectly_on_the_personality_table():
    records = toy_records(20)
    outputs = [r.references[0] for r in records]

    rows, tables = evaluate_outputs(
        "refs", outputs, records, Task.PERSONALITY, RESOURCES
    )

    (row,) = rows
    assert row.size == 20
    assert row.bleu == pytest.approx(100.0)
    assert row.ser == 0.0
    assert row.entropy > 0
    assert row.contrast_accuracy is None

    aggregation, pragmatic = tables
    assert aggregation.category is MarkerCategory.AGGREGATION
    # toy references never aggregate, so every aggregation vector is constant
    assert set(aggregation.flagged) == set(Personality)
    assert row.agg == 0.0
    assert row.prag == pytest.approx(1.0)


def test_contrast_rows_are_split_by_flag():
    records = _contrast_records()
    outputs = [ref for _, _, ref in CONTRAST]

    rows, tables = evaluate_outputs("m3", outputs, records, Task.CONTRAST, RESOURCES)

    assert tables == []
    assert [r.name for r in rows] == ["m3 [contrast]", "m3 [no contrast]"]
    assert (rows[0].attempts, rows[0].contrast_accuracy) == (2, 1.0)
    assert (rows[1].attempts, rows[1].accuracy_flagged) == (0, True)
    assert rows[0].agg is None


def test_output_count_must_match():
    records = toy_records(5)
    with pytest.raises(DataError, match="4 outputs for 5 test records"):
        evaluate_outputs("x", ["a"] * 4, records, Task.PERSONALITY, RESOURCES)


def test_personality_table_needs_labels():
    records = _contrast_records()
    with pytest.raises(UnknownPersonalityLabel):
        evaluate_outputs("x", ["a"] * 3, records, Task.PERSONALITY, RESOURCES)


def test_contrast_table_needs_contrast_flags():
    records = toy_records(3)
    with pytest.raises(DataError, match="no test record carries a contrast flag"):
        evaluate_outputs("x", ["a"] * 3, records, Task.CONTRAST, RESOURCES)


def test_train_row():
    records = toy_records(10)
    row = train_row(records)

    assert (row.name, row.size) == ("Train", 10)
    assert row.bleu is None
    assert row.entropy > 0


def test_write_and_render(filesystem):
    records = toy_records(10)
    outputs = [r.references[0] for r in records]
    report = ExperimentReport(Task.PERSONALITY, "abc", 5)
    rows, tables = evaluate_outputs("refs", outputs, records, report.task, RESOURCES)
    report.rows.extend(rows)
    report.correlations["refs"] = tables
    report.rows.append(train_row(records))

    report.write(filesystem / "report.jsonl")
    lines = [
        json.loads(line)
        for line in (filesystem / "report.jsonl").read_text().splitlines()
    ]
    text = report.render()

    assert lines[0] == {
        "kind": "meta",
        "task": "personality",
        "fingerprint": "abc",
        "seed": 5,
    }
    assert [line["kind"] for line in lines[1:]] == ["row", "row"] + ["correlation"] * 2
    assert set(lines[1]) == {
        "kind",
        "name",
        "size",
        "bleu",
        "ser",
        "entropy",
        "agg",
        "prag",
        "accuracy_flagged",
    }
    assert lines[2]["bleu"] is None

    head = text.splitlines()[0].split()
    assert head == ["model", "BLEU", "SER", "H", "AGG", "PRAG"]
    assert "refs: pragmatic marker correlations" in text
    assert "(constant counts)" in text
    # missing values are dashes
    assert text.splitlines()[3].split()[1:3] == ["-", "-"]
