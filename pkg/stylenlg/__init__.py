from .config import RunConfig
from .errors import (
    ConfigError,
    DataError,
    DivergedTraining,
    NoHypothesisWarning,
    StyleNLGError,
)
from .mr import (
    DatasetRecord,
    MeaningRepresentation,
    StyleConstraint,
    parse_mr,
    serialize_mr,
)
from .retry_session import RetrySession
from .textpipe import TokenSequence, tokenize

__all__ = [
    "ConfigError",
    "DataError",
    "DatasetRecord",
    "DivergedTraining",
    "MeaningRepresentation",
    "NoHypothesisWarning",
    "RetrySession",
    "RunConfig",
    "StyleConstraint",
    "StyleNLGError",
    "TokenSequence",
    "parse_mr",
    "serialize_mr",
    "tokenize",
]
