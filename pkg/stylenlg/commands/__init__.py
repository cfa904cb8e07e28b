from .evaluate import evaluate, score
from .generate import generate
from .ingest import ingest
from .train import grid, train

__all__ = ["evaluate", "generate", "grid", "ingest", "score", "train"]
