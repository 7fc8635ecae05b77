"""
Run logs.

A run directory holds a human-readable `run.log` and the append-only `trials.jsonl`, one
trial record per line. Both are written by a single background thread so entries keep
the order in which they were submitted.
"""

import json
import logging
import math
import queue
import threading
import time
from dataclasses import asdict, dataclass, field
from logging import Logger
from pathlib import Path
from typing import Any, Optional

from metatune.metrics import MetricsReport

log: Logger = logging.getLogger(__name__)

RUN_LOG: str = "run.log"
TRIALS_LOG: str = "trials.jsonl"


@dataclass
class FoldResult:
    fold: int
    objective: float
    metrics: Optional[MetricsReport] = None
    cache_hit: bool = False
    trained_epochs: int = 0

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "objective": _finite_or_none(self.objective),
            "metrics": self.metrics.to_dict() if self.metrics is not None else None,
            "cache_hit": self.cache_hit,
            "trained_epochs": self.trained_epochs,
        }

    @staticmethod
    def from_dict(data: dict) -> "FoldResult":
        return FoldResult(
            fold=int(data["fold"]),
            objective=math.inf if data["objective"] is None else float(data["objective"]),
            metrics=MetricsReport.from_dict(data["metrics"]) if data.get("metrics") else None,
            cache_hit=bool(data.get("cache_hit", False)),
            trained_epochs=int(data.get("trained_epochs", 0)),
        )


@dataclass
class TrialRecord:
    trial_id: int
    phase: str
    """search, rung, repeat or baseline"""

    configuration: dict[str, Any]
    seed: int
    budget: Optional[int] = None
    genotype: Optional[list[float]] = None
    objective: float = math.inf
    """Unweighted mean of the fold objectives, or the pooled objective under leave-one-subject-out
    (+inf when failed)"""

    folds: list[FoldResult] = field(default_factory=list)
    cache_hit: bool = False
    """True only if every fold was served from the cache"""

    duration: float = 0.0
    """Wall-clock seconds; the only field that varies between identical runs"""

    repeat: Optional[int] = None
    error: Optional[str] = None
    pooled: Optional[MetricsReport] = None
    """Metrics over the pooled out-of-fold predictions (leave-one-subject-out plans)"""

    def to_dict(self) -> dict:
        data: dict = asdict(self)
        data["objective"] = _finite_or_none(self.objective)
        data["folds"] = [f.to_dict() for f in self.folds]
        data["pooled"] = self.pooled.to_dict() if self.pooled is not None else None
        return data

    @staticmethod
    def from_dict(data: dict) -> "TrialRecord":
        values: dict = dict(data)
        values["objective"] = math.inf if data["objective"] is None else float(data["objective"])
        values["folds"] = [FoldResult.from_dict(f) for f in data.get("folds", [])]
        values["pooled"] = MetricsReport.from_dict(data["pooled"]) if data.get("pooled") else None
        return TrialRecord(**values)


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


class TrialLog:
    """
    Queue-backed writer of `run.log` and `trials.jsonl`.
    """
    def __init__(self, directory: Path):
        """
        Parameters
        ----------
        directory : Path
            The run directory; created when missing. Existing logs are truncated.
        """
        self.directory: Path = directory
        directory.mkdir(parents=True, exist_ok=True)
        self.log_path: Path = directory / RUN_LOG
        self.trials_path: Path = directory / TRIALS_LOG
        self.log_path.write_text("", encoding="utf-8")
        self.trials_path.write_text("", encoding="utf-8")

        self.count: int = 0
        self.queue: queue.Queue = queue.Queue()
        self.worker: threading.Thread = threading.Thread(target=self._writer, daemon=True)
        self.running: bool = True
        self.worker.start()

    def __enter__(self) -> "TrialLog":
        return self

    def __exit__(self, *exc):
        self.close()

    def log(self, message: str):
        """
        Log a timestamped message to run.log.

        Parameters
        ----------
        message : str
            The message to log.
        """
        timestamp: str = time.strftime("%Y-%m-%d %H:%M:%S")
        self.queue.put((self.log_path, f"{timestamp} - {message}"))

    def record(self, trial: TrialRecord):
        """
        Append a trial record to trials.jsonl.

        Parameters
        ----------
        trial : TrialRecord
            The record; its trial id must be the next one of the run.
        """
        if trial.trial_id != self.count:
            raise ValueError(f"Trial id {trial.trial_id} breaks the sequence (expected {self.count})")
        self.count += 1
        self.queue.put((self.trials_path, json.dumps(trial.to_dict(), sort_keys=True)))

    def close(self):
        """
        Flush pending entries and stop the writer thread.
        """
        if not self.running:
            return
        self.running = False
        self.worker.join()

    def _writer(self):
        """
        Background thread that writes entries in order.
        """
        with open(self.log_path, "a", encoding="utf-8") as log_file, \
                open(self.trials_path, "a", encoding="utf-8") as trials_file:
            files = {self.log_path: log_file, self.trials_path: trials_file}
            while self.running or not self.queue.empty():
                try:
                    path, line = self.queue.get(timeout=0.2)
                except queue.Empty:
                    continue
                files[path].write(line + "\n")
                files[path].flush()


def read_trials(directory: Path) -> list[TrialRecord]:
    """
    Load the trial records of a run directory.

    Raises
    ------
    FileNotFoundError
        If the directory holds no trials.jsonl.
    """
    path: Path = Path(directory) / TRIALS_LOG
    if not path.exists():
        log.error(f"No trial log in {directory}")
        raise FileNotFoundError(f"No trial log in {directory}")
    with open(path, encoding="utf-8") as f:
        return [TrialRecord.from_dict(json.loads(line)) for line in f if line.strip()]
