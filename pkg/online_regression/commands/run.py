import logging
from pathlib import Path
from typing import List, Tuple

import click

from ..core import ObservedPair, decode_learner
from ..datagen import decode_name, generate, read_csv
from ..errors import OnlineRegressionError
from ..settings import SETTINGS
from ..simulation import run_session


logger = logging.getLogger(__name__)


def load_dataset(dataset: str, seed: int) -> Tuple[str, List[ObservedPair]]:
    """A dataset argument is either a CSV path or a synthetic dataset name generated on the fly."""
    path = Path(dataset)
    if path.exists():
        return path.stem, read_csv(path)
    spec = decode_name(dataset, seed=seed)
    return spec.name, generate(spec)


@click.command(name="run")
@click.option("--learner", required=True, help="Learner codename, e.g. GPRegressionZeroMean_WS64.")
@click.option("--dataset", required=True, help="Dataset CSV path or synthetic dataset name.")
@click.option("--seed", type=int, default=0, show_default=True, help="Seeds the learner and a generated dataset.")
@click.option("--trace", "with_traces", is_flag=True, help="Include per-item traces in the report.")
@click.option(
    "--window",
    type=click.IntRange(min=1),
    default=SETTINGS.eval_window,
    show_default=True,
    help="Sliding error window of the RMSE traces.",
)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None, help="Report file (JSON).")
def run_command(learner: str, dataset: str, seed: int, with_traces: bool, window: int, out: Path | None) -> None:
    """Simulates one learner on one stream and prints its session report as JSON."""
    try:
        config = decode_learner(learner, seed=seed)
        name, stream = load_dataset(dataset, seed)
    except OnlineRegressionError as e:
        raise click.ClickException(e.detail) from e
    if not stream:
        raise click.ClickException(f"Dataset {dataset} is empty")

    report = run_session(config, stream, dataset=name, with_traces=with_traces, window=window)
    if out is None:
        click.echo(report.json())
    else:
        out.write_text(report.json())
    if report.failed:
        raise click.ClickException(f"Session failed: {report.error}")
