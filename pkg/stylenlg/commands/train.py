import json
from pathlib import Path
from typing import IO, Callable, Optional

import typer
from tqdm import tqdm

from .. import utils
from ..config import RunConfig
from ..mr import Granularity
from ..numerics import RngState
from ..processed import ProcessedData
from ..seq2seq import (
    EpochStats,
    Method,
    ModelConfig,
    PreparedDataset,
    Task,
    TrainingResult,
    grid_configs,
    grid_search,
    prepare_records,
    save_checkpoint,
    select_best,
)
from ..seq2seq import train as train_model
from .options import (
    BeamOption,
    ConfigOption,
    DataDirOption,
    GranularityOption,
    MethodOption,
    SeedOption,
    TaskOption,
    as_str,
)

CHECKPOINT = "model.ckpt"
TRAINING_LOG = "training_log.jsonl"
GRID_LOG = "grid.jsonl"


def _dataset(data: ProcessedData, model: ModelConfig) -> PreparedDataset:
    slots = data.manifest.delex_slots
    return PreparedDataset(
        prepare_records(data.splits["train"], data.vocabs, model, slots),
        prepare_records(data.splits["dev"], data.vocabs, model, slots),
        data.vocabs,
    )


def _log_epoch(log: IO[str]) -> Callable[[EpochStats], None]:
    def _write(stats: EpochStats) -> None:
        log.write(json.dumps(stats.as_dict(), sort_keys=True) + "\n")
        log.flush()

    return _write


def _save(
    path: Path,
    result: TrainingResult,
    run: RunConfig,
    data: ProcessedData,
) -> None:
    save_checkpoint(
        path,
        result.params,
        data.vocabs.digests(),
        seed=run.seed,
        fingerprint=run.fingerprint(),
        data_fingerprint=data.manifest.fingerprint,
        best_epoch=result.best_epoch,
    )


def train(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    method: Optional[Method] = MethodOption,
    granularity: Optional[Granularity] = GranularityOption,
    task: Optional[Task] = TaskOption,
    beam: Optional[int] = BeamOption,
    data_dir: Optional[Path] = DataDirOption,
    rnn_layers: Optional[int] = typer.Option(None, min=1, max=2),
    rnn_size: Optional[int] = typer.Option(None, min=1),
    max_epochs: Optional[int] = typer.Option(None, min=1),
    learning_rate: Optional[float] = typer.Option(None, min=0.0),
) -> None:
    """
    Trains one model on a processed dataset. Per-epoch perplexities go to
    `training_log.jsonl` and the parameters of the epoch with the lowest dev
    perplexity to `model.ckpt`, both inside a new run directory.
    """
    with utils.reported_errors():
        run = RunConfig.load(
            config,
            seed=seed,
            method=method,
            granularity=granularity,
            task=task,
            beam_width=beam,
            data_dir=as_str(data_dir),
            rnn_layers=rnn_layers,
            rnn_size=rnn_size,
            max_epochs=max_epochs,
            learning_rate=learning_rate,
        )
        data = ProcessedData.load(Path(run.paths.data_dir))
        dataset = _dataset(data, run.model)

        out = utils.run_directory(Path(run.paths.run_root), run.fingerprint())
        run.dump(out / "config.json")
        typer.echo()
        with (out / TRAINING_LOG).open("w", encoding="utf-8") as log:
            result = train_model(
                dataset,
                run.model,
                run.training,
                RngState(run.seed),
                on_epoch=_log_epoch(log),
                progress=True,
            )
        _save(out / CHECKPOINT, result, run, data)

    typer.secho(
        f"\n[ ✔ ] Best dev perplexity {result.best_dev_perplexity:.3f} at epoch"
        f" {result.best_epoch}. Checkpoint written to '{out / CHECKPOINT}'.",
        fg=typer.colors.GREEN,
    )


def grid(
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    method: Optional[Method] = MethodOption,
    granularity: Optional[Granularity] = GranularityOption,
    task: Optional[Task] = TaskOption,
    beam: Optional[int] = BeamOption,
    data_dir: Optional[Path] = DataDirOption,
    workers: Optional[int] = typer.Option(
        None, min=1, help="How many grid models to train in parallel processes."
    ),
) -> None:
    """
    Trains one model per (layers, size) pair of the grid, 1-2 layers by 150-300
    units by default, and keeps the one with the lowest dev perplexity. Each row of
    the grid goes to `grid.jsonl`.
    """
    with utils.reported_errors():
        run = RunConfig.load(
            config,
            seed=seed,
            method=method,
            granularity=granularity,
            task=task,
            beam_width=beam,
            data_dir=as_str(data_dir),
            workers=workers,
        )
        data = ProcessedData.load(Path(run.paths.data_dir))
        dataset = _dataset(data, run.model)
        configs = grid_configs(run.model, run.grid.layers, run.grid.sizes)

        out = utils.run_directory(Path(run.paths.run_root), run.fingerprint())
        run.dump(out / "config.json")
        typer.echo()
        progress = tqdm(
            total=len(configs), desc="Training the grid", bar_format="{l_bar}{bar}"
        )
        with (out / GRID_LOG).open("w", encoding="utf-8") as log:

            def _row(model: ModelConfig, result: TrainingResult) -> None:
                log.write(
                    json.dumps(
                        {
                            "rnn_layers": model.rnn_layers,
                            "rnn_size": model.rnn_size,
                            "best_epoch": result.best_epoch,
                            "dev_perplexity": result.best_dev_perplexity,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
                progress.update()

            outcomes = grid_search(
                dataset,
                configs,
                run.training,
                RngState(run.seed),
                workers=run.grid.workers,
                on_result=_row,
            )
        progress.close()

        best_config, best = select_best(outcomes)
        _save(out / CHECKPOINT, best, run, data)

    typer.secho(
        f"\n[ ✔ ] Trained {len(outcomes)} models. The best has {best_config.rnn_layers}"
        f" layer(s) of {best_config.rnn_size} units (dev perplexity"
        f" {best.best_dev_perplexity:.3f}); checkpoint written to"
        f" '{out / CHECKPOINT}'.",
        fg=typer.colors.GREEN,
    )
