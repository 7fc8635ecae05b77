"""
Binary classification metrics.

Undefined ratios (precision with no positive prediction, kappa with chance agreement 1,
AUC with a single class, ...) are carried as NaN rather than 0.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from logging import Logger
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from metatune.errors import InvalidInputError, UndefinedMetricError

log: Logger = logging.getLogger(__name__)

METRIC_NAMES: tuple[str, ...] = ("accuracy", "precision", "recall", "f1", "auc", "kappa")


def _ratio(num: float, den: float) -> float:
    return num / den if den != 0 else math.nan


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise InvalidInputError("Confusion counts must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    kappa: float
    counts: ConfusionCounts
    n_pos: int
    n_neg: int
    auc: float = math.nan

    def get(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    def to_dict(self) -> dict:
        """JSON-ready form, NaN markers become None"""
        out: dict = asdict(self)
        for name in METRIC_NAMES:
            if math.isnan(out[name]):
                out[name] = None
        return out

    @staticmethod
    def from_dict(data: dict) -> "MetricsReport":
        values: dict = {name: math.nan if data.get(name) is None else float(data[name]) for name in METRIC_NAMES}
        return MetricsReport(
            counts=ConfusionCounts(**data["counts"]),
            n_pos=int(data["n_pos"]),
            n_neg=int(data["n_neg"]),
            **values,
        )


def metrics_from_counts(counts: ConfusionCounts, auc: float = math.nan) -> MetricsReport:
    """All confusion-based metrics of a count tuple"""
    n: int = counts.total
    precision: float = _ratio(counts.tp, counts.tp + counts.fp)
    recall: float = _ratio(counts.tp, counts.tp + counts.fn)
    if math.isnan(precision) or math.isnan(recall):
        f1: float = math.nan
    elif precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)

    p_o: float = _ratio(counts.tp + counts.tn, n)
    p_e: float = _ratio(
        (counts.tp + counts.fp) * (counts.tp + counts.fn) + (counts.tn + counts.fn) * (counts.tn + counts.fp),
        n * n,
    )
    kappa: float = _ratio(p_o - p_e, 1 - p_e)

    return MetricsReport(
        accuracy=p_o,
        precision=precision,
        recall=recall,
        f1=f1,
        kappa=kappa,
        counts=counts,
        n_pos=counts.tp + counts.fn,
        n_neg=counts.tn + counts.fp,
        auc=auc,
    )


def _as_binary(values: Sequence, what: str) -> np.ndarray:
    arr: np.ndarray = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{what} must be a flat sequence")
    if not np.isin(arr, (0, 1)).all():
        raise InvalidInputError(f"{what} must be binary")
    return arr.astype(bool)


def binary_metrics(predictions: Sequence, labels: Sequence) -> MetricsReport:
    """Confusion-based metrics of binary predictions (auc left undefined)

    Raises:
        InvalidInputError: on length mismatch, empty input or non-binary values
    """
    pred: np.ndarray = _as_binary(predictions, "predictions")
    true: np.ndarray = _as_binary(labels, "labels")
    if len(pred) != len(true):
        raise InvalidInputError(f"{len(pred)} predictions for {len(true)} labels")
    if len(pred) == 0:
        raise InvalidInputError("No sample to score")

    counts: ConfusionCounts = ConfusionCounts(
        tp=int(np.sum(pred & true)),
        fp=int(np.sum(pred & ~true)),
        tn=int(np.sum(~pred & ~true)),
        fn=int(np.sum(~pred & true)),
    )
    return metrics_from_counts(counts)


def _check_scores(scores: Sequence[float], labels: Sequence) -> tuple[np.ndarray, np.ndarray]:
    s: np.ndarray = np.asarray(scores, dtype=float)
    y: np.ndarray = _as_binary(labels, "labels")
    if len(s) != len(y):
        raise InvalidInputError(f"{len(s)} scores for {len(y)} labels")
    if y.all() or not y.any():
        raise UndefinedMetricError("AUC needs both classes")
    return s, y


def auc(scores: Sequence[float], labels: Sequence) -> float:
    """Normalized Mann-Whitney statistic (concordant + 0.5 * tied pairs) / (n_pos * n_neg)

    Raises:
        UndefinedMetricError: if only one class is present
    """
    s, y = _check_scores(scores, labels)
    ranks: np.ndarray = rankdata(s)
    n_pos: int = int(y.sum())
    n_neg: int = len(y) - n_pos
    u: float = float(ranks[y].sum()) - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


def roc_curve(scores: Sequence[float], labels: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """ROC points (fpr, tpr, thresholds), one point per distinct score, from (0, 0) to (1, 1)"""
    s, y = _check_scores(scores, labels)
    order: np.ndarray = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]

    # Last index of every group of equal scores
    distinct: np.ndarray = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]
    tps: np.ndarray = np.cumsum(y)[distinct]
    fps: np.ndarray = (distinct + 1) - tps

    tpr: np.ndarray = np.r_[0.0, tps / tps[-1]]
    fpr: np.ndarray = np.r_[0.0, fps / fps[-1]]
    thresholds: np.ndarray = np.r_[np.inf, s[distinct]]
    return fpr, tpr, thresholds


def auc_trapezoid(scores: Sequence[float], labels: Sequence) -> float:
    fpr, tpr, _ = roc_curve(scores, labels)
    return float(np.trapezoid(tpr, fpr))


def score_report(scores: Sequence[float], labels: Sequence, threshold: float = 0.5) -> MetricsReport:
    """Full report of probability scores: thresholded metrics plus AUC"""
    s: np.ndarray = np.asarray(scores, dtype=float)
    report: MetricsReport = binary_metrics((s >= threshold).astype(int), labels)
    try:
        report.auc = auc(s, labels)
    except UndefinedMetricError:
        log.warning("Single-class split, AUC left undefined")
    return report


@dataclass
class MetricSummary:
    mean: float
    sd: float
    n: int
    excluded: int = 0
    """Reports whose value was undefined"""


@dataclass
class Aggregate:
    metrics: dict[str, MetricSummary] = field(default_factory=dict)

    def __getitem__(self, name: str) -> MetricSummary:
        return self.metrics[name]

    def format(self, name: str, digits: int = 3) -> str:
        m: MetricSummary = self.metrics[name]
        if math.isnan(m.mean):
            return "n/a"
        if math.isnan(m.sd):
            return f"{m.mean:.{digits}f}"
        return f"{m.mean:.{digits}f} ± {m.sd:.{digits}f}"


def aggregate(reports: Sequence[MetricsReport], names: Optional[Sequence[str]] = None) -> Aggregate:
    """Mean and sample standard deviation (n - 1) of every metric over folds or seeds"""
    if len(reports) == 0:
        raise InvalidInputError("Nothing to aggregate")
    out: Aggregate = Aggregate()
    for name in names or METRIC_NAMES:
        values: np.ndarray = np.array([r.get(name) for r in reports], dtype=float)
        kept: np.ndarray = values[~np.isnan(values)]
        mean: float = float(kept.mean()) if len(kept) else math.nan
        sd: float = float(kept.std(ddof=1)) if len(kept) >= 2 else math.nan
        out.metrics[name] = MetricSummary(mean=mean, sd=sd, n=len(kept), excluded=len(values) - len(kept))
    return out
