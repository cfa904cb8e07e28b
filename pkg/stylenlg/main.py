import typer

from .commands import evaluate, generate, grid, ingest, score, train

app = typer.Typer(
    help="Trains and evaluates stylistically controlled generators that realize"
    " slot-value meaning representations as text.",
    no_args_is_help=True,
)

# subcommands, in pipeline order
app.command(no_args_is_help=True)(ingest)
app.command()(train)
app.command()(grid)
app.command(no_args_is_help=True)(generate)
app.command(no_args_is_help=True)(evaluate)
app.command(no_args_is_help=True)(score)
