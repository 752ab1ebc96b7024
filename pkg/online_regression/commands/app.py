import logging

import click

from .aggregate import aggregate_command
from .gen import gen_command
from .ingest import ingest_command
from .matrix import matrix_command
from .run import run_command


logger = logging.getLogger(__name__)

_LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


@click.group(help="Online regression learners with prediction bounds: simulate, evaluate, aggregate.")
@click.option(
    "--log-level",
    type=click.Choice(_LOG_LEVELS, case_sensitive=False),
    default=None,
    help="Overrides ONLINE_REGRESSION_LOG_LEVEL for this invocation.",
)
def cli(log_level: str | None) -> None:
    if log_level is not None:
        logging.getLogger().setLevel(log_level.upper())


cli.add_command(gen_command)
cli.add_command(run_command)
cli.add_command(matrix_command)
cli.add_command(ingest_command)
cli.add_command(aggregate_command)
