"""Mini-batch SGD with dev-perplexity model selection."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..errors import ConfigError, DivergedTraining
from ..numerics import Array, RngState, backward, has_nonfinite, no_grad, sgd_step
from .data import Batch, PreparedDataset, PreparedExample, make_batch
from .model import ModelConfig, ModelParams, loss


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.1
    clip: Optional[float] = 5.0
    max_epochs: int = 50
    lr_decay: float = 0.5
    max_len: Optional[int] = None
    length_normalize: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.clip is not None and self.clip <= 0:
            raise ConfigError("clip must be positive (or null to disable clipping)")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError("lr_decay must be in (0, 1]")
        if self.max_len is not None and self.max_len < 1:
            raise ConfigError("max_len must be >= 1")

    def decode_length(self, dataset: PreparedDataset) -> int:
        """`max_len`, or twice the longest training reference."""
        if self.max_len is not None:
            return self.max_len
        return max(2 * dataset.longest_reference, 1)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_perplexity: float
    dev_perplexity: float
    learning_rate: float
    grad_norm: float
    best: bool

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass
class TrainingResult:
    params: ModelParams
    history: List[EpochStats] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_dev_perplexity(self) -> float:
        return min(s.dev_perplexity for s in self.history)


def batches(
    examples: Sequence[PreparedExample],
    size: int,
    order: Optional[np.ndarray] = None,
) -> Iterator[Batch]:
    index = np.arange(len(examples)) if order is None else order
    for start in range(0, len(index), size):
        yield make_batch([examples[int(i)] for i in index[start : start + size]])


def perplexity(
    params: ModelParams, examples: Sequence[PreparedExample], batch_size: int = 128
) -> float:
    """`exp` of the mean per-token NLL over `examples`, without dropout."""
    if not examples:
        raise ValueError("perplexity of an empty set is undefined")
    nll, tokens = 0.0, 0
    with no_grad():
        for batch in batches(examples, batch_size):
            result = loss(params, batch)
            nll += result.nll_sum
            tokens += result.tokens
    return math.exp(nll / tokens)


def train(
    dataset: PreparedDataset,
    config: ModelConfig,
    training: TrainingConfig,
    rng: RngState,
    params: Optional[ModelParams] = None,
    on_epoch: Optional[Callable[[EpochStats], None]] = None,
    progress: bool = False,
) -> TrainingResult:
    """
    Trains on shuffled mini-batches and keeps the parameters of the epoch with the
    lowest dev perplexity (train perplexity when there is no dev set). The learning
    rate is multiplied by `lr_decay` after every epoch that does not improve.

    Randomness is drawn from `rng.split(0)` for initialization and
    `rng.split(1, epoch[, step])` for shuffling and dropout, so a given seed always
    produces the same run.
    """
    if not dataset.train:
        raise ValueError("cannot train on an empty training set")
    if params is None:
        params = ModelParams.initialize(config, dataset.vocabs.sizes, rng.split(0))

    lr = training.learning_rate
    best = math.inf
    snapshot: Dict[str, Array] = params.snapshot()
    result = TrainingResult(params)

    epochs = range(1, training.max_epochs + 1)
    if progress:
        epochs = tqdm(  # type: ignore[assignment]
            epochs, desc="epochs", bar_format="{l_bar}{bar}"
        )

    for epoch in epochs:
        epoch_rng = rng.split(1, epoch)
        order = epoch_rng.generator().permutation(len(dataset.train))
        nll, tokens, norm = 0.0, 0, 0.0

        for step, batch in enumerate(batches(dataset.train, config.batch_size, order)):
            step_rng = epoch_rng.split(step).generator()
            out = loss(params, batch, training=True, rng=step_rng)
            if not math.isfinite(float(out.loss.value)):
                raise DivergedTraining(f"non-finite loss in epoch {epoch}, step {step}")
            backward(out.loss)
            if has_nonfinite([p.grad for p in params.nodes()]):
                raise DivergedTraining(
                    f"non-finite gradient in epoch {epoch}, step {step}"
                )
            norm = sgd_step(params.nodes(), lr, training.clip)
            nll += out.nll_sum
            tokens += out.tokens

        train_ppl = math.exp(nll / tokens)
        dev_ppl = (
            perplexity(params, dataset.dev, config.batch_size)
            if dataset.dev
            else train_ppl
        )
        if not math.isfinite(dev_ppl):
            raise DivergedTraining(f"non-finite dev perplexity in epoch {epoch}")

        improved = dev_ppl < best
        if improved:
            best = dev_ppl
            snapshot = params.snapshot()
            result.best_epoch = epoch

        stats = EpochStats(epoch, train_ppl, dev_ppl, lr, norm, improved)
        result.history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
        if not improved:
            lr *= training.lr_decay

    params.restore(snapshot)
    return result


GRID_LAYERS = (1, 2)
GRID_SIZES = (150, 200, 250, 300)


def grid_configs(
    base: ModelConfig,
    layers: Sequence[int] = GRID_LAYERS,
    sizes: Sequence[int] = GRID_SIZES,
) -> List[ModelConfig]:
    return [replace(base, rnn_layers=n, rnn_size=s) for n in layers for s in sizes]


def _grid_job(
    job: Tuple[PreparedDataset, ModelConfig, TrainingConfig, RngState]
) -> TrainingResult:
    dataset, config, training, rng = job
    return train(dataset, config, training, rng)


def grid_search(
    dataset: PreparedDataset,
    configs: Sequence[ModelConfig],
    training: TrainingConfig,
    rng: RngState,
    workers: int = 1,
    on_result: Optional[Callable[[ModelConfig, TrainingResult], None]] = None,
) -> List[Tuple[ModelConfig, TrainingResult]]:
    """
    Trains one model per configuration, all from the same seed. With `workers > 1`
    the jobs run in a process pool; results always come back in `configs` order.
    """
    jobs = [(dataset, config, training, rng) for config in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_grid_job, jobs))
    else:
        results = [_grid_job(job) for job in jobs]

    outcomes = list(zip(configs, results))
    if on_result is not None:
        for config, result in outcomes:
            on_result(config, result)
    return outcomes


def select_best(
    outcomes: Sequence[Tuple[ModelConfig, TrainingResult]]
) -> Tuple[ModelConfig, TrainingResult]:
    """Lowest dev perplexity; the earlier configuration wins a tie."""
    return min(outcomes, key=lambda o: o[1].best_dev_perplexity)
