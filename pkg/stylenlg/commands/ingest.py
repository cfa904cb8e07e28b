from pathlib import Path
from typing import List, Optional

import typer
from tqdm import tqdm

from .. import utils
from ..config import RunConfig
from ..mr import DatasetRecord, iter_records
from ..numerics import RngState
from ..processed import ProcessedData, split_dev
from .options import ConfigOption, SeedOption, as_str


def _read(source: str, what: str) -> List[DatasetRecord]:
    text = utils.read_source(source)
    return list(
        tqdm(
            iter_records(text),
            desc=f"Reading the {what} set",
            bar_format="{l_bar}{bar}",
            total=text.count("\n") or None,
        )
    )


def ingest(
    train: Optional[str] = typer.Argument(
        None,
        help="The raw training set: a line-delimited record file or an http(s) URL.",
    ),
    dev: Optional[str] = typer.Option(
        None,
        help="A raw development set. Without one, part of the training set is held out.",
    ),
    test: Optional[str] = typer.Option(None, help="A raw test set."),
    out: Optional[Path] = typer.Option(
        None, "--out", help="Where to write the processed dataset."
    ),
    delex_slot: Optional[List[str]] = typer.Option(
        None,
        help="A slot type to delexicalize. Pass this option multiple times for more"
        " than one slot. Defaults to 'name' and 'near'.",
    ),
    min_count: Optional[int] = typer.Option(
        None, min=1, help="Rarer items map to the unknown token."
    ),
    dev_fraction: Optional[float] = typer.Option(
        None,
        min=0.0,
        max=0.99,
        help="The share of the training set held out when no dev set is given.",
    ),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
) -> None:
    """
    Tokenizes, delexicalizes and indexes a raw dataset. Writes the processed records,
    the slot-type, slot-value and target vocabularies and a manifest with the record
    counts per class.
    """
    with utils.reported_errors():
        run = RunConfig.load(
            config,
            seed=seed,
            train=train,
            dev=dev,
            test=test,
            data_dir=as_str(out),
            delex_slots=tuple(delex_slot) if delex_slot else None,
            min_count=min_count,
            dev_fraction=dev_fraction,
        )

        train_records = _read(run.paths.require("train"), "training")
        if run.paths.dev:
            dev_records = _read(run.paths.require("dev"), "development")
        else:
            # a fixed branch of the seed, independent of training's streams
            train_records, dev_records = split_dev(
                train_records, run.dev_fraction, RngState(run.seed).split(2)
            )
        test_records = _read(run.paths.require("test"), "test") if run.paths.test else []

        data = ProcessedData.build(
            train_records,
            dev_records,
            test_records,
            fingerprint=run.data_fingerprint(),
            seed=run.seed,
            delex_slots=run.delex_slots,
            min_count=run.min_count,
        )
        directory = Path(run.paths.data_dir)
        data.save(directory)

    typer.echo()
    for split, classes in data.manifest.classes.items():
        if not classes:
            continue
        summary = ", ".join(f"{label}: {count}" for label, count in classes.items())
        typer.echo(f"      {split:<5} {data.manifest.counts[split]:>7}  ({summary})")
    typer.secho(
        f"\n[ ✔ ] Processed dataset written to '{directory}' (fingerprint"
        f" {data.manifest.fingerprint[:8]}).",
        fg=typer.colors.GREEN,
    )
