import json
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import typer
from tqdm import tqdm

from .. import utils
from ..config import RunConfig
from ..errors import (
    ConfigError,
    MissingPath,
    NoHypothesisWarning,
    UnknownPlaceholder,
)
from ..mr import (
    DatasetRecord,
    Granularity,
    Personality,
    StyleConstraint,
    load_records,
    serialize_mr,
)
from ..processed import ProcessedData
from ..seq2seq import (
    Method,
    ModelConfig,
    Task,
    beam_generate,
    load_checkpoint,
    prepare_records,
)
from ..textpipe import DelexMap, TokenSequence, is_placeholder, relexicalize
from .options import BeamOption, ConfigOption, DataDirOption, SeedOption, as_str


def sidecar_path(output: Path) -> Path:
    return output.with_name(output.name + ".meta.json")


def inputs_fingerprint(records: Sequence[DatasetRecord]) -> str:
    """Identifies the ordered MRs outputs were generated for."""
    return utils.fingerprint(*(serialize_mr(r.mr) for r in records))


def _realize(out: TokenSequence, delex: DelexMap) -> Tuple[str, bool]:
    """The relexicalized text, and whether placeholders of absent slots were dropped."""
    try:
        return relexicalize(out, delex), False
    except UnknownPlaceholder:
        known = {name for name, _, _ in delex.placeholders}
        kept = tuple(t for t in out.tokens if not is_placeholder(t) or t in known)
        return relexicalize(TokenSequence(kept), delex), True


def check_overrides(
    model: ModelConfig,
    contrast: Optional[bool],
    personality: Optional[Personality],
) -> None:
    """Rejects style overrides the checkpoint's model cannot be conditioned on."""
    if contrast is not None and personality is not None:
        raise ConfigError("--contrast/--no-contrast and --personality are exclusive")
    if model.method is Method.NOCON:
        return
    if personality is not None:
        if model.task is not Task.PERSONALITY:
            raise ConfigError("--personality needs a model trained for personalities")
        if model.granularity is Granularity.FINE:
            raise ConfigError(
                "--personality cannot be used with a fine-grained model: it needs the"
                " 36 style parameters that only the input records carry"
            )
    if contrast is not None and model.task is not Task.CONTRAST:
        raise ConfigError("--contrast/--no-contrast needs a model trained for contrast")


def _override(
    records: Sequence[DatasetRecord],
    contrast: Optional[bool],
    personality: Optional[Personality],
) -> List[DatasetRecord]:
    if contrast is None and personality is None:
        return list(records)
    if personality is not None:
        # fine parameters belong to a specific reference, so only the label is kept
        c = StyleConstraint.of_personality(personality)
    else:
        c = StyleConstraint.of_contrast(bool(contrast))
    return [replace(r, constraint=c) for r in records]


def generate(
    checkpoint: Path = typer.Argument(..., help="A checkpoint written by `train`."),
    inputs: Optional[Path] = typer.Option(
        None,
        "--input",
        help="A record file to realize. Defaults to the processed test set.",
    ),
    output: Path = typer.Option(
        Path("outputs.txt"), "--output", help="Where to write one realization per line."
    ),
    contrast: Optional[bool] = typer.Option(
        None,
        "--contrast/--no-contrast",
        help="Ask for (or against) a contrast in every output, whatever the records say.",
    ),
    personality: Optional[Personality] = typer.Option(
        None,
        case_sensitive=False,
        help="Realize every input in this personality, whatever the records say."
        " Not available for fine-grained models.",
    ),
    max_len: Optional[int] = typer.Option(
        None, min=1, help="Stop decoding after this many tokens."
    ),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    beam: Optional[int] = BeamOption,
    data_dir: Optional[Path] = DataDirOption,
) -> None:
    """
    Realizes every input record with beam search, then relexicalizes and
    recapitalizes the result. A `<output>.meta.json` sidecar records where the
    outputs came from.
    """
    with utils.reported_errors():
        run = RunConfig.load(
            config, seed=seed, data_dir=as_str(data_dir), max_len=max_len
        )
        data = ProcessedData.load(Path(run.paths.data_dir))
        if not Path(checkpoint).is_file():
            raise MissingPath(f"checkpoint '{checkpoint}' does not exist")
        ckpt = load_checkpoint(checkpoint, data.vocabs.digests())
        check_overrides(ckpt.config, contrast, personality)

        if inputs is not None:
            if not inputs.is_file():
                raise MissingPath(f"'{inputs}' does not exist")
            records = load_records(inputs)
        elif data.splits["test"]:
            records = data.splits["test"]
        else:
            raise MissingPath("no --input given and the processed data has no test set")
        records = _override(records, contrast, personality)

        examples = prepare_records(
            records,
            data.vocabs,
            ckpt.config,
            data.manifest.delex_slots,
            with_targets=False,
        )
        width = beam if beam is not None else ckpt.config.beam_width
        limit = run.training.max_len or max(2 * data.manifest.longest_reference, 1)

        lines: List[str] = []
        unfinished = dropped = 0
        typer.echo()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", NoHypothesisWarning)
            for example in tqdm(
                examples, desc="Generating", bar_format="{l_bar}{bar}"
            ):
                gen = beam_generate(
                    ckpt.params,
                    example,
                    data.vocabs.target,
                    beam_width=width,
                    max_len=limit,
                    length_normalize=run.training.length_normalize,
                )
                line, stray = _realize(gen.tokens, example.delex)
                lines.append(line)
                dropped += stray
            unfinished = sum(
                issubclass(w.category, NoHypothesisWarning) for w in caught
            )

        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        meta: Dict[str, Any] = {
            "checkpoint_sha256": utils.file_digest(checkpoint),
            "fingerprint": ckpt.header.get("fingerprint"),
            "data_fingerprint": ckpt.header.get("data_fingerprint"),
            "seed": ckpt.header.get("seed"),
            "model": ckpt.config.as_dict(),
            "beam_width": width,
            "max_len": limit,
            "input": str(inputs) if inputs is not None else "test",
            "inputs_fingerprint": inputs_fingerprint(records),
            "overrides": {
                "contrast": contrast,
                "personality": personality.value if personality else None,
            },
            "count": len(lines),
            "unfinished": unfinished,
            "dropped_placeholders": dropped,
        }
        sidecar_path(output).write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    if unfinished:
        typer.secho(
            f"\n[ ! ] {unfinished} input(s) reached the length limit without finishing;"
            " their best partial realization was kept.",
            fg=typer.colors.YELLOW,
        )
    if dropped:
        typer.secho(
            f"\n[ ! ] {dropped} realization(s) named slots missing from their MR;"
            " those placeholders were dropped.",
            fg=typer.colors.YELLOW,
        )
    typer.secho(
        f"\n[ ✔ ] Wrote {len(lines)} realization(s) to '{output}'.",
        fg=typer.colors.GREEN,
    )
