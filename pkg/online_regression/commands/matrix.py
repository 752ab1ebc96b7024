import asyncio
import logging
from pathlib import Path
from typing import List

import click

from ..core import LearnerConfig, decode_learner, shortlist
from ..datagen import enumerate_suite
from ..errors import OnlineRegressionError
from ..simulation import DatasetSource, run_matrix


logger = logging.getLogger(__name__)


def read_learner_file(path: Path, seed: int) -> List[LearnerConfig]:
    """One codename per line; blank lines and `#` comments are ignored."""
    names = [line.split("#", 1)[0].strip() for line in path.read_text().splitlines()]
    return [decode_learner(name, seed=seed) for name in names if name]


@click.command(name="matrix")
@click.option(
    "--learners",
    "learner_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="File with one learner codename per line (default: the shortlist).",
)
@click.option("--suite", is_flag=True, help="Run on the generated 576-dataset suite.")
@click.option(
    "--datasets",
    "dataset_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Directory of dataset CSV files.",
)
@click.option("--master-seed", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Learner seed.")
@click.option("--parallel", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--trace", "with_traces", is_flag=True)
@click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path), default=Path("reports"), show_default=True
)
def matrix_command(
    learner_file: Path | None,
    suite: bool,
    dataset_dir: Path | None,
    master_seed: int,
    seed: int,
    parallel: int,
    with_traces: bool,
    out: Path,
) -> None:
    """Runs every learner on every dataset and writes one JSON report per session."""
    try:
        if learner_file is not None:
            configs = read_learner_file(learner_file, seed)
        else:
            configs = [decode_learner(name, seed=seed) for name in shortlist()]
    except OnlineRegressionError as e:
        raise click.ClickException(e.detail) from e

    datasets: List[DatasetSource] = []
    if suite:
        datasets += enumerate_suite(master_seed)
    if dataset_dir is not None:
        datasets += sorted(dataset_dir.glob("*.csv"))
    if not datasets:
        raise click.UsageError("Pass --suite and/or --datasets")

    reports = asyncio.run(run_matrix(configs, datasets, parallelism=parallel, with_traces=with_traces))
    out.mkdir(parents=True, exist_ok=True)
    for report in reports:
        (out / f"{report.dataset}__{report.learner}.json").write_text(report.json())

    failed = sum(report.failed for report in reports)
    click.echo(f"{len(reports)} sessions written to {out} ({failed} failed)")
