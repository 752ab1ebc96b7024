"""
Stream simulation following the online prediction protocol, plus ingestion and aggregation.

For every item: the learner predicts, the target is revealed, the learner observes (updating or
tuning as its lifecycle dictates), and the loss, bounds, timings and phase are recorded.
"""
import asyncio
import csv
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from timeit import default_timer as timer
from typing import Dict, Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .core import LearnerConfig, ObservedPair, OnlineLearner, decode_learner, trace
from .datagen import DatasetSpec, decode_name, generate, read_csv
from .errors import NegativeRuntime, OnlineRegressionError, ParseError, UnknownLearner
from .evalkit import SessionRecords, compute_session_metrics, windowed_trace
from .learners import build_learner
from .numkit import Vector
from .reports import AggregateRow, SessionReport, SessionTraces
from .settings import SETTINGS


logger = logging.getLogger(__name__)

DatasetSource = DatasetSpec | Path

GROUP_KEYS = ("family", "learner", "window", "dims", "noise", "drift", "continuity", "online")
AGGREGATED_METRICS = (
    "rmse",
    "rmse_st",
    "smse",
    "smse_st",
    "icr",
    "aiw",
    "saiw",
    "apt",
    "hpt",
    "tpt",
    "aut",
    "hut",
    "tut",
    "att",
    "htt",
    "ttt",
    "tt",
    "atpi",
    "drmax",
)


def simulate(learner: OnlineLearner, stream: Iterable[ObservedPair]) -> SessionRecords:
    """Runs the predict-then-observe loop. The learner never sees a target before predicting it."""
    records = SessionRecords()
    for pair in stream:
        phase = learner.phase
        start = timer()
        triple = learner.predict(pair.point)
        predict_ms = (timer() - start) * 1000.0
        step = learner.observe(pair, triple)
        records.record(pair.target, triple, phase, predict_ms, step)
    return records


def session_traces(records: SessionRecords, window: int = SETTINGS.eval_window) -> SessionTraces:
    squared = records.squared_errors()
    stable = records.stable_mask
    stable_trace: List[float | None] = [None] * len(records)
    for index, value in zip(np.flatnonzero(stable), windowed_trace(squared[stable], window)):
        stable_trace[int(index)] = float(value)
    return SessionTraces(
        target=records.targets,
        lower=records.lower,
        point=records.point,
        upper=records.upper,
        phase=[phase.value for phase in records.phases],
        predict_ms=records.predict_ms,
        update_ms=records.update_ms,
        tune_ms=records.tune_ms,
        windowed_rmse=windowed_trace(squared, window).tolist(),
        windowed_rmse_st=stable_trace,
    )


@trace
def run_session(
    config: LearnerConfig,
    stream: Sequence[ObservedPair],
    dataset: str = "stream",
    with_traces: bool = False,
    window: int = SETTINGS.eval_window,
) -> SessionReport:
    assert stream, "a session needs at least one item"
    name = config.name
    try:
        learner = build_learner(config, dims=len(stream[0].point))
        records = simulate(learner, stream)
        report = SessionReport(learner=name, dataset=dataset, metrics=compute_session_metrics(records))
        if with_traces:
            report.traces = session_traces(records, window)
        return report
    except Exception as e:
        logger.error(f"Session {name} on {dataset} failed", exc_info=True)
        detail = e.detail if isinstance(e, OnlineRegressionError) else f"{type(e).__name__}: {e}"
        return SessionReport(learner=name, dataset=dataset, error=detail)


def load_source(source: DatasetSource) -> Tuple[str, List[ObservedPair]]:
    if isinstance(source, DatasetSpec):
        return source.name, generate(source)
    return source.stem, read_csv(source)


def _session_job(config: LearnerConfig, source: DatasetSource, with_traces: bool) -> SessionReport:
    dataset, stream = load_source(source)
    return run_session(config, stream, dataset=dataset, with_traces=with_traces)


@trace
async def run_matrix(
    configs: Sequence[LearnerConfig],
    datasets: Sequence[DatasetSource],
    parallelism: int = 1,
    with_traces: bool = False,
) -> List[SessionReport]:
    """One report per (dataset, learner) pair, ordered dataset-major regardless of scheduling."""
    assert parallelism >= 1
    jobs = [(config, source) for source in datasets for config in configs]
    logger.info(f"Running {len(jobs)} sessions with parallelism {parallelism}")
    if parallelism == 1:
        return [_session_job(config, source, with_traces) for config, source in jobs]

    loop = asyncio.get_running_loop()
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return await asyncio.gather(
            *(loop.run_in_executor(pool, _session_job, config, source, with_traces) for config, source in jobs)
        )


class MeasurementRecord(NamedTuple):
    operator: str
    device: str
    features: Vector
    runtime_ms: float


@trace
def read_measurements(path: Path, dims: int, meta: bool = False) -> List[MeasurementRecord]:
    """
    Reads a runtime measurement file: a header, then `[operator,device,]f1..fK,runtime` rows.

    Rows keep file order, which carries the drift structure of the measurement campaign.
    """
    expected = dims + 1 + (2 if meta else 0)
    records: List[MeasurementRecord] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or len(header) != expected:
            raise ParseError(f"expected a header with {expected} columns", line=1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != expected:
                raise ParseError(f"expected {expected} columns, got {len(row)}", line=line)
            operator, device = (row[0], row[1]) if meta else ("", "")
            try:
                values = [float(v) for v in row[2 if meta else 0 :]]
            except ValueError as e:
                raise ParseError(str(e), line=line) from e
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite value", line=line)
            if values[-1] < 0.0:
                raise NegativeRuntime(f"line {line}: runtime {values[-1]} is negative")
            records.append(MeasurementRecord(operator, device, np.array(values[:-1]), values[-1]))
    logger.info(f"Ingested {len(records)} measurements from {path}")
    return records


def ingest_measurements(path: Path, dims: int, meta: bool = False) -> List[ObservedPair]:
    return [ObservedPair(r.features, r.runtime_ms) for r in read_measurements(path, dims, meta)]


def group_value(report: SessionReport, key: str) -> str:
    """Value of a grouping key for one report; "unknown" for non-suite datasets and foreign learner names."""
    if key == "learner":
        return report.learner
    if key in ("family", "window", "online"):
        try:
            config = decode_learner(report.learner)
        except UnknownLearner:
            logger.warning(f"Cannot group {report.learner!r} by {key}: not a learner codename")
            return "unknown"
        if key == "family":
            return config.family
        if key == "online":
            return "batch" if config.frozen_after_training else "online"
        if config.capacity is not None:
            return str(config.capacity)
        return f"FF{config.forgetting_factor!r}" if config.forgetting_factor is not None else "-"
    try:
        spec = decode_name(report.dataset)
    except ParseError:
        return "unknown"
    return {
        "dims": str(spec.dims),
        "noise": f"{spec.noise_var:g}",
        "drift": "CD" if spec.drifting else "NCD",
        "continuity": "D" if spec.discontinuous else "ND",
    }[key]


@trace
def aggregate(reports: Iterable[SessionReport], group_by: Sequence[str]) -> List[AggregateRow]:
    """
    Per-group arithmetic means of the scalar metrics.

    Undefined metrics (and failed sessions) are skipped and counted per metric. Sums are exact
    (`math.fsum`), so the result does not depend on report order.
    """
    unknown = set(group_by) - set(GROUP_KEYS)
    assert not unknown, f"unknown grouping keys {sorted(unknown)}"

    groups: Dict[Tuple[str, ...], List[SessionReport]] = defaultdict(list)
    for report in reports:
        groups[tuple(group_value(report, key) for key in group_by)].append(report)

    rows = []
    for group in sorted(groups):
        members = groups[group]
        means: Dict[str, float | None] = {}
        skipped: Dict[str, int] = {}
        for metric in AGGREGATED_METRICS:
            values = [getattr(r.metrics, metric) for r in members if r.metrics is not None]
            defined = [v for v in values if v is not None]
            means[metric] = math.fsum(defined) / len(defined) if defined else None
            skipped[metric] = len(members) - len(defined)
        rows.append(AggregateRow(group=dict(zip(group_by, group)), count=len(members), means=means, skipped=skipped))
    return rows
