import csv
import json
import logging
from pathlib import Path
from typing import List

import click

from ..reports import SessionReport
from ..simulation import GROUP_KEYS, aggregate


logger = logging.getLogger(__name__)


def collect_reports(paths: tuple[Path, ...]) -> List[SessionReport]:
    files: List[Path] = []
    for path in paths:
        files += sorted(path.glob("*.json")) if path.is_dir() else [path]
    return [SessionReport.parse_file(file) for file in files]


@click.command(name="aggregate")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True, path_type=Path))
@click.option(
    "--group-by",
    "group_by",
    multiple=True,
    type=click.Choice(GROUP_KEYS),
    default=("family",),
    show_default=True,
    help="Grouping key. Repeatable.",
)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
def aggregate_command(paths: tuple[Path, ...], group_by: tuple[str, ...], fmt: str) -> None:
    """Averages session reports (files or directories of JSON reports) per group."""
    rows = aggregate(collect_reports(paths), group_by)
    stdout = click.get_text_stream("stdout")
    if fmt == "json":
        stdout.write(json.dumps([json.loads(row.json()) for row in rows], indent=2) + "\n")
        return
    flat = [row.flat() for row in rows]
    if not flat:
        return
    writer = csv.DictWriter(stdout, fieldnames=list(flat[0]))
    writer.writeheader()
    writer.writerows(flat)
