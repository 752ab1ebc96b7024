import logging
from pathlib import Path

import click

from ..datagen import decode_name, enumerate_suite, generate, write_csv
from ..errors import ParseError


logger = logging.getLogger(__name__)


@click.command(name="gen")
@click.option("--suite", is_flag=True, help="Emit all 576 datasets of the benchmark suite.")
@click.option("--name", "names", multiple=True, help="Dataset name, e.g. SYNTH_D_CD_2000_1_50_1_13. Repeatable.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed of a dataset given by --name.")
@click.option("--master-seed", type=int, default=0, show_default=True, help="Seed the suite seeds derive from.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("datasets"),
    show_default=True,
    help="Directory receiving one <NAME>.csv per dataset.",
)
def gen_command(suite: bool, names: tuple[str, ...], seed: int, master_seed: int, out: Path) -> None:
    """Writes synthetic datasets as CSV files (header x1,...,xd,y)."""
    if not suite and not names:
        raise click.UsageError("Pass --suite or at least one --name")
    try:
        specs = enumerate_suite(master_seed) if suite else []
        specs += [decode_name(name, seed=seed) for name in names]
    except ParseError as e:
        raise click.ClickException(e.detail) from e

    out.mkdir(parents=True, exist_ok=True)
    for spec in specs:
        write_csv(generate(spec), out / f"{spec.name}.csv")
    logger.info(f"Wrote {len(specs)} datasets to {out}")
    click.echo(f"{len(specs)} datasets written to {out}")
