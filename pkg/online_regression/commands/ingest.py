import logging
from pathlib import Path
from typing import Tuple

import click

from ..core import decode_learner
from ..datagen import write_csv
from ..errors import OnlineRegressionError
from ..simulation import ingest_measurements, run_session


logger = logging.getLogger(__name__)


def parse_schema(text: str) -> Tuple[int, bool]:
    """`dims=K` or `dims=K,meta` (leading operator,device columns)."""
    dims: int | None = None
    meta = False
    for part in filter(None, (p.strip() for p in text.split(","))):
        if part == "meta":
            meta = True
        elif part.startswith("dims=") and part[5:].isdigit() and int(part[5:]) > 0:
            dims = int(part[5:])
        else:
            raise click.BadParameter(f"unexpected schema entry {part!r}", param_hint="--schema")
    if dims is None:
        raise click.BadParameter("dims=K is required", param_hint="--schema")
    return dims, meta


@click.command(name="ingest")
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--schema", required=True, help="dims=K[,meta]: K feature columns, optional operator,device prefix.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Dataset CSV to write.")
@click.option("--learner", default=None, help="Also simulate this learner on the ingested stream.")
@click.option("--seed", type=int, default=0, show_default=True)
def ingest_command(path: Path, schema: str, out: Path | None, learner: str | None, seed: int) -> None:
    """Reads a runtime measurement CSV in file order, as a dataset file and/or a simulated session."""
    dims, meta = parse_schema(schema)
    try:
        stream = ingest_measurements(path, dims, meta)
        config = decode_learner(learner, seed=seed) if learner is not None else None
    except OnlineRegressionError as e:
        raise click.ClickException(e.detail) from e
    if not stream:
        raise click.ClickException(f"{path} holds no measurements")

    if out is not None:
        write_csv(stream, out)
    click.echo(f"{len(stream)} measurements with {dims} features", err=True)
    if config is not None:
        click.echo(run_session(config, stream, dataset=path.stem).json())
