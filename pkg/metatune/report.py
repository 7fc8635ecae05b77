"""
Run summaries and run-to-run comparison.

`summary.json` is the timing-free digest of a run. Two runs are comparable when they were
evaluated on the same CV plan; their repeat-phase fold results are then paired by
(repeat, fold) and tested on F1. Leave-one-subject-out runs pair one pooled report per
repeat.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from logging import Logger
from pathlib import Path
from typing import Any, Optional, Sequence

from metatune.errors import DegenerateTestError, IncomparableRunsError
from metatune.metrics import Aggregate, MetricsReport, aggregate
from metatune.stats import ComparisonResult, paired_t, wilcoxon_signed_rank
from metatune.trial_log import TrialRecord, read_trials

log: Logger = logging.getLogger(__name__)

SUMMARY_FILE: str = "summary.json"
COMPARISON_MD: str = "comparison.md"
COMPARISON_JSON: str = "comparison.json"

TABLE_COLUMNS: tuple[tuple[str, str], ...] = (
    ("Accuracy", "accuracy"),
    ("Precision", "precision"),
    ("Recall", "recall"),
    ("F1", "f1"),
    ("AUC", "auc"),
)
"""Header and metric name of the result table columns"""


def json_float(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def _number(value: Optional[float]) -> float:
    return math.nan if value is None else float(value)


@dataclass
class RunSummary:
    name: str
    optimizer: str
    master_seed: int
    best_configuration: dict[str, Any]
    best_value: float
    n_trials: int
    history: list[float] = field(default_factory=list)
    plan_fingerprint: Optional[str] = None
    repeats: dict[str, dict[str, float]] = field(default_factory=dict)
    """Metric -> mean, sd, n and excluded count over repeat x fold results"""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "optimizer": self.optimizer,
            "master_seed": self.master_seed,
            "best_configuration": self.best_configuration,
            "best_value": json_float(self.best_value),
            "n_trials": self.n_trials,
            "history": [json_float(v) for v in self.history],
            "plan_fingerprint": self.plan_fingerprint,
            "repeats": {
                name: {k: json_float(v) for k, v in values.items()} for name, values in self.repeats.items()
            },
        }

    @staticmethod
    def from_dict(data: dict) -> "RunSummary":
        return RunSummary(
            name=data["name"],
            optimizer=data["optimizer"],
            master_seed=int(data["master_seed"]),
            best_configuration=data["best_configuration"],
            best_value=_number(data["best_value"]),
            n_trials=int(data["n_trials"]),
            history=[_number(v) for v in data.get("history", [])],
            plan_fingerprint=data.get("plan_fingerprint"),
            repeats={
                name: {k: _number(v) for k, v in values.items()} for name, values in data.get("repeats", {}).items()
            },
        )

    def write(self, path: Path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True, default=str)
            f.write("\n")


def load_summary(directory: Path) -> RunSummary:
    """
    Raises:
        FileNotFoundError: if the directory holds no summary.json
    """
    path: Path = Path(directory) / SUMMARY_FILE
    if not path.exists():
        log.error(f"No run summary in {directory}")
        raise FileNotFoundError(f"No run summary in {directory}")
    with open(path, encoding="utf-8") as f:
        return RunSummary.from_dict(json.load(f))


def markdown_table(rows: Sequence[Sequence[str]], header: Optional[Sequence[str]] = None) -> str:
    header = list(header) if header is not None else ["Model"] + [title for title, _ in TABLE_COLUMNS]
    lines: list[str] = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join("---" for _ in header) + "|",
    ]
    lines += ["| " + " | ".join(row) + " |" for row in rows]
    return "\n".join(lines)


def summary_row(label: str, agg: Aggregate) -> list[str]:
    """One table row of mean ± SD cells"""
    return [label] + [agg.format(name) for _, name in TABLE_COLUMNS]


@dataclass
class ComparisonTable:
    run_a: str
    run_b: str
    aggregate_a: Aggregate
    aggregate_b: Aggregate
    wilcoxon: ComparisonResult
    t_test: ComparisonResult
    n_pairs: int

    def to_markdown(self) -> str:
        table: str = markdown_table([
            summary_row(self.run_a, self.aggregate_a),
            summary_row(self.run_b, self.aggregate_b),
        ])
        lines: list[str] = [
            f"# {self.run_a} vs {self.run_b}",
            "",
            f"{self.n_pairs} paired fold x seed results.",
            "",
            table,
            "",
            "| Test on F1 | Statistic | p-value | Note |",
            "|---|---|---|---|",
        ]
        for result in (self.wilcoxon, self.t_test):
            note: str = "degenerate" if result.degenerate else ("exact" if result.exact else "")
            lines.append(f"| {result.test_kind} | {result.statistic:.4g} | {result.p_value:.4g} | {note} |")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        def metrics(agg: Aggregate) -> dict:
            return {
                name: {"mean": json_float(m.mean), "sd": json_float(m.sd), "n": m.n, "excluded": m.excluded}
                for name, m in agg.metrics.items()
            }
        return {
            "run_a": self.run_a,
            "run_b": self.run_b,
            "n_pairs": self.n_pairs,
            "metrics_a": metrics(self.aggregate_a),
            "metrics_b": metrics(self.aggregate_b),
            "wilcoxon": self.wilcoxon.to_dict(),
            "paired_t": self.t_test.to_dict(),
        }


def _repeat_reports(directory: Path) -> dict[tuple[int, int], MetricsReport]:
    reports: dict[tuple[int, int], MetricsReport] = {}
    trials: list[TrialRecord] = read_trials(directory)
    for trial in trials:
        if trial.phase != "repeat" or trial.repeat is None or trial.error is not None:
            continue
        if trial.pooled is not None:
            reports[(trial.repeat, -1)] = trial.pooled
            continue
        for fold in trial.folds:
            if fold.metrics is not None:
                reports[(trial.repeat, fold.fold)] = fold.metrics
    return reports


def report_compare(run_a: Path, run_b: Path, out: Optional[Path] = None) -> ComparisonTable:
    """Compares the repeated results of two runs on the same CV plan

    Args:
        run_a (Path): first run directory
        run_b (Path): second run directory
        out (Optional[Path]): where to write comparison.md / .json, nothing written when None

    Raises:
        FileNotFoundError: if a run directory lacks its summary or trial log
        IncomparableRunsError: if the plans differ or fewer than 2 results pair up

    Returns:
        ComparisonTable: per-run aggregates and the tests on F1
    """
    summary_a: RunSummary = load_summary(run_a)
    summary_b: RunSummary = load_summary(run_b)
    if summary_a.plan_fingerprint is None or summary_a.plan_fingerprint != summary_b.plan_fingerprint:
        raise IncomparableRunsError(f"{run_a} and {run_b} were not evaluated on the same CV plan")

    reports_a: dict[tuple[int, int], MetricsReport] = _repeat_reports(run_a)
    reports_b: dict[tuple[int, int], MetricsReport] = _repeat_reports(run_b)
    keys: list[tuple[int, int]] = sorted(
        k for k in set(reports_a) & set(reports_b)
        if not (math.isnan(reports_a[k].f1) or math.isnan(reports_b[k].f1))
    )
    if len(keys) < 2:
        raise IncomparableRunsError(f"Only {len(keys)} (repeat, fold) results pair up")
    if len(keys) < max(len(reports_a), len(reports_b)):
        log.warning(f"Comparing {len(keys)} of {max(len(reports_a), len(reports_b))} results that pair up")

    f1_a: list[float] = [reports_a[k].f1 for k in keys]
    f1_b: list[float] = [reports_b[k].f1 for k in keys]
    wilcoxon: ComparisonResult = wilcoxon_signed_rank(f1_a, f1_b)
    try:
        t_test: ComparisonResult = paired_t(f1_a, f1_b)
    except DegenerateTestError as e:
        log.warning(f"Paired t-test: {e}")
        t_test = ComparisonResult(statistic=0.0, p_value=1.0, test_kind="paired_t", n_pairs=len(keys), degenerate=True)

    table: ComparisonTable = ComparisonTable(
        run_a=summary_a.name if summary_a.name != summary_b.name else str(run_a),
        run_b=summary_b.name if summary_a.name != summary_b.name else str(run_b),
        aggregate_a=aggregate([reports_a[k] for k in keys]),
        aggregate_b=aggregate([reports_b[k] for k in keys]),
        wilcoxon=wilcoxon,
        t_test=t_test,
        n_pairs=len(keys),
    )
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / COMPARISON_MD).write_text(table.to_markdown(), encoding="utf-8")
        with open(out / COMPARISON_JSON, "w", encoding="utf-8") as f:
            json.dump(table.to_dict(), f, indent=2, default=str)
            f.write("\n")
    log.info(f"Wilcoxon p = {wilcoxon.p_value:.4g}, paired t p = {t_test.p_value:.4g} over {len(keys)} pairs")
    return table
