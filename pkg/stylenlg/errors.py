from typing import Optional, Tuple


class StyleNLGError(Exception):
    """Base class of every error raised by stylenlg. `exit_code` is used by the CLI."""

    exit_code: int = 1


class ConfigError(StyleNLGError):
    exit_code = 2


class MissingPath(ConfigError):
    pass


class DataError(StyleNLGError):
    exit_code = 3


class MalformedMR(DataError):
    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class MalformedRecord(DataError):
    def __init__(self, message: str, lineno: Optional[int] = None) -> None:
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{message}")


class ConstraintModeMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class UnknownPlaceholder(DataError):
    pass


class ChecksumMismatch(DataError):
    pass


class LineageMismatch(DataError):
    pass


class UnknownPersonalityLabel(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class ZeroVariance(DataError):
    pass


class NumericsError(StyleNLGError):
    pass


class ShapeMismatch(NumericsError):
    def __init__(self, op: str, *shapes: Tuple[int, ...]) -> None:
        self.shapes = shapes
        listed = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {listed}")


class NonScalarLoss(NumericsError):
    pass


class DivergedTraining(StyleNLGError):
    exit_code = 4


class NoHypothesisWarning(UserWarning):
    """Beam search hit `max_len` before any hypothesis emitted EOS."""
