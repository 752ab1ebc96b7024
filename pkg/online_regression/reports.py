import logging
from typing import Dict, List

from pydantic import BaseModel

from .evalkit import SessionMetrics


logger = logging.getLogger(__name__)


class SessionTraces(BaseModel):
    """Per-item series of one session, in stream order. Never aggregated across sessions."""

    target: List[float]
    lower: List[float]
    point: List[float]
    upper: List[float]
    phase: List[str]
    predict_ms: List[float]
    update_ms: List[float]
    tune_ms: List[float]
    windowed_rmse: List[float]
    windowed_rmse_st: List[float | None]  # None where the learner was not Stable


class SessionReport(BaseModel):
    learner: str
    dataset: str
    metrics: SessionMetrics | None = None
    traces: SessionTraces | None = None
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


class AggregateRow(BaseModel):
    group: Dict[str, str]
    count: int
    means: Dict[str, float | None]
    skipped: Dict[str, int]

    def flat(self) -> Dict[str, object]:
        """Single-level mapping for CSV output."""
        row: Dict[str, object] = {**self.group, "count": self.count}
        row.update(self.means)
        row.update({f"{metric}_skipped": n for metric, n in self.skipped.items()})
        return row
