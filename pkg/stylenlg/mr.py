"""
Meaning representations, style constraints and dataset records.

An MR is written the way the E2E-derived benchmarks write it:
`name[Browns Cambridge], eatType[coffee shop], near[Crowne Plaza Hotel]`.
Dataset files hold one JSON record per line with `mr`, `style` and `refs`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

from .errors import ConstraintModeMismatch, MalformedMR, MalformedRecord

FINE_PARAM_COUNT = 36

# brackets delimit values, so a value may contain neither
VALUE_FORBIDDEN = "[]"


def value_problem(value: str) -> Optional[str]:
    """Why `value` cannot be a slot value, or None if it can."""
    if not value.strip():
        return "empty or blank value"
    if any(ch in value for ch in VALUE_FORBIDDEN):
        return "value contains a bracket"
    return None


class Personality(str, Enum):
    AGREEABLE = "agreeable"
    DISAGREEABLE = "disagreeable"
    CONSCIENTIOUS = "conscientious"
    UNCONSCIENTIOUS = "unconscientious"
    EXTRAVERT = "extravert"

    @classmethod
    def parse(cls, label: str) -> "Personality":
        return cls(label.strip().lower())


class ConstraintKind(str, Enum):
    NONE = "none"
    PERSONALITY = "personality"
    CONTRAST = "contrast"


class Granularity(str, Enum):
    COARSE = "coarse"
    FINE = "fine"


@dataclass(frozen=True)
class SlotValue:
    slot_type: str
    slot_value: str

    def __post_init__(self) -> None:
        if not self.slot_type or self.slot_type != self.slot_type.strip():
            raise MalformedMR(f"invalid slot type {self.slot_type!r}")
        if any(ch in self.slot_type for ch in "[],"):
            raise MalformedMR(f"slot type {self.slot_type!r} contains a separator")
        problem = value_problem(self.slot_value)
        if problem is not None:
            raise MalformedMR(f"{problem} {self.slot_value!r} for {self.slot_type}")


@dataclass(frozen=True)
class MeaningRepresentation:
    slots: Tuple[SlotValue, ...]

    def __post_init__(self) -> None:
        if not self.slots:
            raise MalformedMR("a meaning representation needs at least one slot")
        seen = set()
        for sv in self.slots:
            if sv.slot_type in seen:
                raise MalformedMR(f"duplicate slot type {sv.slot_type!r}")
            seen.add(sv.slot_type)

    def __len__(self) -> int:
        return len(self.slots)

    def __iter__(self) -> Iterator[SlotValue]:
        return iter(self.slots)

    def get(self, slot_type: str) -> Optional[str]:
        for sv in self.slots:
            if sv.slot_type == slot_type:
                return sv.slot_value
        return None

    @property
    def slot_types(self) -> Tuple[str, ...]:
        return tuple(sv.slot_type for sv in self.slots)


@dataclass(frozen=True)
class StyleConstraint:
    kind: ConstraintKind = ConstraintKind.NONE
    personality: Optional[Personality] = None
    fine_params: Optional[Tuple[int, ...]] = None
    contrast: Optional[bool] = None

    def __post_init__(self) -> None:
        if self.kind is ConstraintKind.PERSONALITY:
            ok = self.personality is not None and self.contrast is None
        elif self.kind is ConstraintKind.CONTRAST:
            ok = (
                self.contrast is not None
                and self.personality is None
                and self.fine_params is None
            )
        else:
            ok = (
                self.personality is None
                and self.fine_params is None
                and self.contrast is None
            )
        if not ok:
            raise ConstraintModeMismatch(f"inconsistent {self.kind.value} constraint")
        if self.fine_params is not None:
            if len(self.fine_params) != FINE_PARAM_COUNT or any(
                bit not in (0, 1) for bit in self.fine_params
            ):
                raise ConstraintModeMismatch(
                    f"fine parameters must be {FINE_PARAM_COUNT} bits in {{0,1}}"
                )

    @classmethod
    def none(cls) -> "StyleConstraint":
        return cls()

    @classmethod
    def of_personality(
        cls, personality: Personality, fine_params: Optional[Tuple[int, ...]] = None
    ) -> "StyleConstraint":
        return cls(
            ConstraintKind.PERSONALITY,
            personality=personality,
            fine_params=tuple(fine_params) if fine_params is not None else None,
        )

    @classmethod
    def of_contrast(cls, contrast: bool) -> "StyleConstraint":
        return cls(ConstraintKind.CONTRAST, contrast=contrast)

    def for_mode(self, mode: Granularity) -> "StyleConstraint":
        """Drops the fine parameters when running under coarse control."""
        if mode is Granularity.COARSE and self.fine_params is not None:
            return StyleConstraint.of_personality(self.personality)  # type: ignore
        return self

    @property
    def label(self) -> str:
        """The single token that names this constraint (used by token supervision)."""
        if self.kind is ConstraintKind.PERSONALITY:
            return self.personality.value  # type: ignore
        if self.kind is ConstraintKind.CONTRAST:
            return "contrast" if self.contrast else "nocontrast"
        return "none"


@dataclass(frozen=True)
class DatasetRecord:
    mr: MeaningRepresentation
    constraint: StyleConstraint
    references: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.references:
            raise MalformedRecord("a record needs at least one reference")


def _byte_offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


def parse_mr(text: str) -> MeaningRepresentation:
    """
    Parses a comma-separated list of `slot[value]` items. Slot order is kept, the
    whitespace around separators is dropped and bracketed values are taken verbatim.
    Errors carry the byte offset of the first violation.
    """
    slots: List[SlotValue] = []
    seen = set()
    i, end = 0, len(text)

    while True:
        while i < end and text[i].isspace():
            i += 1
        start = i
        bracket = text.find("[", i)
        comma = text.find(",", i)
        if bracket == -1 or (comma != -1 and comma < bracket):
            raise MalformedMR("expected `slot[value]`", _byte_offset(text, start))

        slot_type = text[start:bracket].strip()
        if not slot_type or "]" in slot_type:
            raise MalformedMR("empty or invalid slot type", _byte_offset(text, start))

        close = text.find("]", bracket + 1)
        if close == -1:
            raise MalformedMR("missing closing bracket", _byte_offset(text, bracket))
        value = text[bracket + 1 : close]
        problem = value_problem(value)
        if problem is not None:
            raise MalformedMR(problem, _byte_offset(text, bracket + 1))
        if slot_type in seen:
            raise MalformedMR(
                f"duplicate slot type {slot_type!r}", _byte_offset(text, start)
            )
        seen.add(slot_type)
        slots.append(SlotValue(slot_type, value))

        i = close + 1
        while i < end and text[i].isspace():
            i += 1
        if i == end:
            break
        if text[i] != ",":
            raise MalformedMR("expected `,` between items", _byte_offset(text, i))
        i += 1

    return MeaningRepresentation(tuple(slots))


def serialize_mr(mr: MeaningRepresentation) -> str:
    return ", ".join(f"{sv.slot_type}[{sv.slot_value}]" for sv in mr.slots)


def validate_constraint(c: StyleConstraint, mode: Granularity) -> StyleConstraint:
    """Checks that a constraint carries exactly what the control granularity needs."""
    if mode is Granularity.FINE:
        if c.kind is not ConstraintKind.PERSONALITY or c.fine_params is None:
            raise ConstraintModeMismatch(
                "fine-grained control needs a personality and all"
                f" {FINE_PARAM_COUNT} style parameters"
            )
    elif c.fine_params is not None:
        raise ConstraintModeMismatch(
            "coarse control does not take style parameters; drop them first"
        )
    return c


def _parse_style(style: Any, lineno: Optional[int]) -> StyleConstraint:
    if style is None:
        return StyleConstraint.none()
    if not isinstance(style, dict):
        raise MalformedRecord("`style` must be an object", lineno)

    personality, params, contrast = (
        style.get("personality"),
        style.get("params"),
        style.get("contrast"),
    )
    try:
        if personality is not None:
            if contrast is not None:
                raise MalformedRecord(
                    "`personality` and `contrast` are mutually exclusive", lineno
                )
            return StyleConstraint.of_personality(
                Personality.parse(personality),
                tuple(int(b) for b in params) if params is not None else None,
            )
        if params is not None:
            raise MalformedRecord("`params` needs a `personality`", lineno)
        if contrast is not None:
            if not isinstance(contrast, bool):
                raise MalformedRecord("`contrast` must be a boolean", lineno)
            return StyleConstraint.of_contrast(contrast)
    except (ValueError, TypeError, ConstraintModeMismatch) as err:
        raise MalformedRecord(str(err), lineno) from err

    return StyleConstraint.none()


def parse_record(line: str, lineno: Optional[int] = None) -> DatasetRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        raise MalformedRecord(f"invalid JSON ({err.msg})", lineno) from err
    if not isinstance(obj, dict) or "mr" not in obj:
        raise MalformedRecord("expected an object with an `mr` field", lineno)

    try:
        mr = parse_mr(obj["mr"])
    except MalformedMR as err:
        raise MalformedRecord(str(err), lineno) from err

    refs = obj.get("refs") or []
    if not isinstance(refs, list) or not all(isinstance(r, str) for r in refs):
        raise MalformedRecord("`refs` must be a list of strings", lineno)
    if not refs:
        raise MalformedRecord("a record needs at least one reference", lineno)

    return DatasetRecord(mr, _parse_style(obj.get("style"), lineno), tuple(refs))


def style_to_json(c: StyleConstraint) -> Dict[str, Any]:
    return {
        "personality": c.personality.value if c.personality else None,
        "params": list(c.fine_params) if c.fine_params is not None else None,
        "contrast": c.contrast,
    }


def dump_record(record: DatasetRecord) -> str:
    return json.dumps(
        {
            "mr": serialize_mr(record.mr),
            "style": style_to_json(record.constraint),
            "refs": list(record.references),
        },
        ensure_ascii=False,
    )


def iter_records(text: str) -> Iterator[DatasetRecord]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield parse_record(line, lineno)


def load_records(path: Path) -> List[DatasetRecord]:
    return list(iter_records(Path(path).read_text(encoding="utf-8")))
