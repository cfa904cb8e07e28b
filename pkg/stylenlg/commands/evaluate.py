import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import typer

from .. import utils
from ..config import RunConfig
from ..errors import DataError, LineageMismatch, MissingPath
from ..metrics import align_slots, contrast_judge, ser
from ..mr import DatasetRecord, load_records, parse_mr
from ..processed import ProcessedData
from ..report import ExperimentReport, MetricResources, evaluate_outputs, train_row
from ..seq2seq import Task
from .generate import inputs_fingerprint, sidecar_path
from .options import ConfigOption, DataDirOption, SeedOption, TaskOption, as_str

REPORT = "report.jsonl"
REPORT_TEXT = "report.txt"


def _sidecar(output: Path) -> Optional[Dict[str, Any]]:
    path = sidecar_path(output)
    if not path.is_file():
        return None
    try:
        return dict(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, TypeError, ValueError) as err:
        raise DataError(f"{path}: unreadable generation metadata ({err})") from err


def check_lineage(
    output: Path,
    meta: Dict[str, Any],
    data: ProcessedData,
    records: Sequence[DatasetRecord],
) -> None:
    """Outputs must come from a model trained on this dataset, for these inputs."""
    if meta.get("data_fingerprint") != data.manifest.fingerprint:
        raise LineageMismatch(
            f"'{output}' was generated by a model trained on another dataset"
            f" ({str(meta.get('data_fingerprint'))[:8]} vs"
            f" {data.manifest.fingerprint[:8]})"
        )
    if meta.get("inputs_fingerprint") != inputs_fingerprint(records):
        raise LineageMismatch(f"'{output}' was generated for other test inputs")


def _read_outputs(output: Path) -> List[str]:
    if not output.is_file():
        raise MissingPath(f"'{output}' does not exist")
    return output.read_text(encoding="utf-8").splitlines()


def evaluate(
    outputs: List[Path] = typer.Argument(
        ..., help="One or more files of realizations, one per test record."
    ),
    test: Optional[Path] = typer.Option(
        None, help="The test records. Defaults to the processed test set."
    ),
    name: Optional[List[str]] = typer.Option(
        None,
        help="A row label per output file, in order. Defaults to the file names.",
    ),
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    task: Optional[Task] = TaskOption,
    data_dir: Optional[Path] = DataDirOption,
) -> None:
    """
    Scores output files against the test set: BLEU, slot error rate and n-gram
    entropy, plus marker correlations (personality) or contrast accuracy
    (contrast). The report is echoed and written to `report.jsonl` in a new run
    directory.
    """
    with utils.reported_errors():
        run = RunConfig.load(config, seed=seed, task=task, data_dir=as_str(data_dir))
        if name and len(name) != len(outputs):
            raise DataError(f"{len(name)} --name label(s) for {len(outputs)} file(s)")
        data = ProcessedData.load(Path(run.paths.data_dir))
        if test is not None:
            if not test.is_file():
                raise MissingPath(f"'{test}' does not exist")
            records = load_records(test)
        else:
            records = data.splits["test"]
        if not records:
            raise MissingPath("no test records to evaluate against")

        resources = MetricResources.from_options(run.metrics)
        metas = [_sidecar(o) for o in outputs]
        report_task = run.model.task
        if task is None and metas[0] is not None and "model" in metas[0]:
            report_task = Task(metas[0]["model"].get("task", report_task.value))
        report = ExperimentReport(report_task, run.fingerprint(), run.seed)

        for i, output in enumerate(outputs):
            label = name[i] if name else output.stem
            meta = metas[i]
            if meta is None:
                typer.secho(
                    f"[ ! ] '{output}' has no generation metadata; its lineage cannot"
                    " be checked.",
                    fg=typer.colors.YELLOW,
                )
            else:
                check_lineage(output, meta, data, records)
            rows, tables = evaluate_outputs(
                label, _read_outputs(output), records, report_task, resources
            )
            report.rows.extend(rows)
            if tables:
                report.correlations[label] = tables
        report.rows.append(train_row(data.splits["train"]))

        out = utils.run_directory(Path(run.paths.run_root), run.fingerprint())
        report.write(out / REPORT)
        text = report.render()
        (out / REPORT_TEXT).write_text(text + "\n", encoding="utf-8")

    typer.echo(f"\n{text}")
    typer.secho(
        f"\n[ ✔ ] Report written to '{out / REPORT}'.", fg=typer.colors.GREEN
    )


def score(
    mr: str = typer.Argument(..., help='An MR such as "name[X], food[Italian]".'),
    text: str = typer.Argument(..., help="A realization of the MR."),
    config: Optional[Path] = ConfigOption,
) -> None:
    """
    Shows how the slot aligner reads one realization: the status of every slot, the
    slot error counts and the contrast judgment.
    """
    with utils.reported_errors():
        run = RunConfig.load(config)
        resources = MetricResources.from_options(run.metrics)
        meaning = parse_mr(mr)
        alignment = align_slots(meaning, text, resources.slots)
        counts, value = ser(meaning, text, resources.slots)
        judgment = contrast_judge(
            meaning, text, resources.polarity, resources.slots, resources.cues
        )

    typer.echo()
    for match in alignment.slots:
        extra = f" (found {', '.join(match.wrong)})" if match.wrong else ""
        repeats = f", {match.repeats} repeat(s)" if match.repeats else ""
        status = f"{match.status.value}{extra}{repeats}"
        typer.echo(f"      {match.slot_type}[{match.value}]: {status}")
    for slot in alignment.hallucinated:
        typer.echo(f"      {slot}: hallucinated")

    typer.echo(
        f"\n      S={counts.substitutions} D={counts.deletions} R={counts.repeats}"
        f" H={counts.hallucinations} N={counts.slots}  SER={value:.3f}"
    )
    evidence = judgment.evidence
    if judgment.valid and evidence and evidence.left and evidence.right:
        (ls, lv), (rs, rv) = evidence.left, evidence.right
        typer.echo(f"      contrast: valid ({ls}[{lv}] {evidence.cue} {rs}[{rv}])")
    elif judgment.attempted:
        typer.echo("      contrast: attempted, not valid")
    else:
        typer.echo("      contrast: not attempted")

    color = typer.colors.GREEN if counts.errors == 0 else typer.colors.YELLOW
    mark = "✔" if counts.errors == 0 else "!"
    typer.secho(
        f"\n[ {mark} ] {counts.errors} slot error(s) over {counts.slots} slot(s).",
        fg=color,
    )
