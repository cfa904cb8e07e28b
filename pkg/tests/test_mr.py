import json
import random
import string

import pytest

from stylenlg.errors import ConstraintModeMismatch, MalformedMR, MalformedRecord
from stylenlg.mr import (
    FINE_PARAM_COUNT,
    ConstraintKind,
    DatasetRecord,
    Granularity,
    MeaningRepresentation,
    Personality,
    SlotValue,
    StyleConstraint,
    dump_record,
    iter_records,
    parse_mr,
    parse_record,
    serialize_mr,
    validate_constraint,
)

from .conftest import FIXTURES

BROWNS = (
    "name[Browns Cambridge], eatType[coffee shop], food[Italian],"
    " customerRating[average], area[riverside], familyFriendly[yes],"
    " near[Crowne Plaza Hotel]"
)


def test_parse_benchmark_mr():
    mr = parse_mr(BROWNS)

    assert len(mr) == 7
    assert mr.slots[0] == SlotValue("name", "Browns Cambridge")
    assert mr.slot_types[-1] == "near"
    assert mr.get("eatType") == "coffee shop"


def test_parse_single_slot():
    assert parse_mr("name[X]") == MeaningRepresentation((SlotValue("name", "X"),))


def test_parse_keeps_order_and_case():
    mr = parse_mr("  near[The Sorrento] ,name[Zizzi]")
    assert mr.slot_types == ("near", "name")
    assert mr.get("near") == "The Sorrento"


@pytest.mark.parametrize(
    "text, offset",
    [
        ("name[A], name[B]", 9),
        ("name[A", 4),
        ("name[]", 5),
        ("name[X], food[ ]", 14),
        ("name[X], food[\t  ]", 14),
        ("name[a[b]", 5),
        ("[A]", 0),
        ("name[A] food[B]", 8),
        ("", 0),
    ],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(MalformedMR) as err:
        parse_mr(text)
    assert err.value.offset == offset


def test_offsets_are_in_bytes():
    with pytest.raises(MalformedMR) as err:
        parse_mr("name[Café], name[B]")
    # "é" takes two bytes
    assert err.value.offset == 13


@pytest.mark.parametrize("value", ["", "  ", "a]b", "a[b"])
def test_slot_value_rejects_what_the_parser_rejects(value):
    with pytest.raises(MalformedMR):
        SlotValue("food", value)
    with pytest.raises(MalformedMR):
        parse_mr(f"name[X], food[{value}]")


def test_blank_value_in_a_record_names_its_line():
    good = json.dumps({"mr": "name[X]", "refs": ["X."]})
    blank = json.dumps({"mr": "name[X], food[ ]", "refs": ["X."]})

    with pytest.raises(MalformedRecord, match=r"^line 2: empty or blank value") as err:
        list(iter_records(f"{good}\n{blank}\n"))
    assert err.value.lineno == 2


def test_serialize_normalizes_separators():
    assert serialize_mr(parse_mr("name[X]")) == "name[X]"
    assert serialize_mr(parse_mr(BROWNS.replace(", ", ",  "))) == BROWNS


def _random_mr(rng):
    alphabet = string.ascii_letters + string.digits + " -£$'&."
    slots = []
    for slot_type in rng.sample(["name", "food", "area", "near", "eatType", "x1"], 3):
        value = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 12)))
        slots.append(SlotValue(slot_type, value.strip() or "v"))
    return MeaningRepresentation(tuple(slots))


def test_round_trip_random_mrs():
    rng = random.Random(1234)
    for _ in range(100):
        mr = _random_mr(rng)
        assert parse_mr(serialize_mr(mr)) == mr


def test_benchmark_fixture_parses():
    lines = (FIXTURES / "mrs.txt").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 50
    for line in lines:
        count, text = line.split("\t")
        assert len(parse_mr(text)) == int(count)


def test_validate_constraint():
    coarse = StyleConstraint.of_personality(Personality.EXTRAVERT)
    fine = StyleConstraint.of_personality(
        Personality.AGREEABLE, (1, 0) * (FINE_PARAM_COUNT // 2)
    )

    assert validate_constraint(coarse, Granularity.COARSE) is coarse
    assert validate_constraint(fine, Granularity.FINE) is fine
    with pytest.raises(ConstraintModeMismatch):
        validate_constraint(coarse, Granularity.FINE)
    with pytest.raises(ConstraintModeMismatch):
        validate_constraint(fine, Granularity.COARSE)
    assert validate_constraint(fine.for_mode(Granularity.COARSE), Granularity.COARSE)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": ConstraintKind.PERSONALITY},
        {"kind": ConstraintKind.CONTRAST},
        {
            "kind": ConstraintKind.CONTRAST,
            "contrast": True,
            "personality": Personality.EXTRAVERT,
        },
        {"kind": ConstraintKind.NONE, "contrast": False},
        {
            "kind": ConstraintKind.PERSONALITY,
            "personality": Personality.EXTRAVERT,
            "fine_params": (1,) * 35,
        },
    ],
)
def test_inconsistent_constraints_cannot_be_built(kwargs):
    with pytest.raises(ConstraintModeMismatch):
        StyleConstraint(**kwargs)


def test_constraint_labels():
    assert StyleConstraint.none().label == "none"
    assert StyleConstraint.of_contrast(True).label == "contrast"
    assert StyleConstraint.of_contrast(False).label == "nocontrast"
    assert StyleConstraint.of_personality(Personality.EXTRAVERT).label == "extravert"


def test_record_round_trip():
    record = DatasetRecord(
        parse_mr("name[X], priceRange[cheap]"),
        StyleConstraint.of_contrast(True),
        ("X is cheap.", "X is cheap, but good."),
    )
    assert parse_record(dump_record(record)) == record


def test_parse_record_style_forms():
    line = json.dumps(
        {
            "mr": "name[X]",
            "style": {"personality": "Extravert", "params": None, "contrast": None},
            "refs": ["yeah, X!"],
        }
    )
    record = parse_record(line)
    assert record.constraint.personality is Personality.EXTRAVERT
    assert parse_record('{"mr": "name[X]", "refs": ["X."]}').constraint.kind is (
        ConstraintKind.NONE
    )


@pytest.mark.parametrize(
    "line",
    [
        "not json",
        '{"refs": ["x"]}',
        '{"mr": "name[X", "refs": ["x"]}',
        '{"mr": "name[X]", "refs": []}',
        '{"mr": "name[X]", "refs": ["x"], "style": {"personality": "grumpy"}}',
        '{"mr": "name[X]", "refs": ["x"], "style": {"contrast": "yes"}}',
        '{"mr": "name[X]", "refs": ["x"], "style": {"params": [1]}}',
    ],
)
def test_malformed_records(line):
    with pytest.raises(MalformedRecord):
        parse_record(line, lineno=7)


def test_iter_records_reports_line_numbers():
    text = '{"mr": "name[X]", "refs": ["X."]}\n\nnot json\n'
    with pytest.raises(MalformedRecord) as err:
        list(iter_records(text))
    assert err.value.lineno == 3
    assert "line 3" in str(err.value)
