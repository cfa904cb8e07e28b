"""Options shared by several commands; every one of them overrides the config file."""
from pathlib import Path
from typing import Optional

import typer

ConfigOption = typer.Option(
    None,
    "--config",
    help="A JSON run configuration. Flags given on the command line take precedence.",
)
SeedOption = typer.Option(
    None, "--seed", min=0, help="The seed every random choice derives from."
)
MethodOption = typer.Option(
    None, "--method", case_sensitive=False, help="How the style constraint is injected."
)
GranularityOption = typer.Option(
    None,
    "--granularity",
    case_sensitive=False,
    help="Personality label only (coarse) or label plus the 36 style parameters (fine).",
)
BeamOption = typer.Option(
    None, "--beam", min=1, help="The beam width used for generation."
)
TaskOption = typer.Option(
    None, "--task", case_sensitive=False, help="The kind of side constraint."
)
DataDirOption = typer.Option(
    None, "--data", help="The processed-data directory written by `ingest`."
)


def as_str(path: Optional[Path]) -> Optional[str]:
    return str(path) if path is not None else None
