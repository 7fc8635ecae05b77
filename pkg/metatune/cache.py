"""
Checkpoint cache.

Entries are keyed by (configuration hash, fold, seed, epochs) and stored as one pickle
file per key. The key format `<config_hash>-f<fold>-s<seed>-e<epochs>` is stable.
"""

import logging
import os
import pickle
import tempfile
import threading
from dataclasses import dataclass
from logging import Logger
from pathlib import Path
from typing import Optional

import numpy as np

from metatune.metrics import MetricsReport
from metatune.trainer import Checkpoint

log: Logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CacheKey:
    config_hash: str
    fold: int
    seed: int
    epochs: int

    def token(self) -> str:
        return f"{self.config_hash}-f{self.fold}-s{self.seed}-e{self.epochs}"


@dataclass
class CacheEntry:
    checkpoint: Checkpoint
    objective: float
    metrics: MetricsReport
    scores: Optional[np.ndarray] = None
    """Validation probabilities, kept for pooled scoring"""

    penalty: float = 0.0


class CheckpointCache:
    """Thread-safe cache, persisted to `directory` when one is given"""

    def __init__(self, directory: Optional[Path] = None):
        self.logger: Logger = logging.getLogger("CheckpointCache")
        self.directory: Optional[Path] = directory
        self._entries: dict[CacheKey, CacheEntry] = {}
        self._lock: threading.Lock = threading.Lock()
        self.hits: int = 0
        self.misses: int = 0
        if directory is not None:
            directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: CacheKey) -> Path:
        assert self.directory is not None
        return self.directory / f"{key.token()}.pkl"

    def get(self, key: CacheKey) -> Optional[CacheEntry]:
        with self._lock:
            entry: Optional[CacheEntry] = self._entries.get(key)
            if entry is None and self.directory is not None and self._path(key).exists():
                with open(self._path(key), "rb") as f:
                    entry = pickle.load(f)
                self._entries[key] = entry  # type: ignore[assignment]
            if entry is None:
                self.misses += 1
            else:
                self.hits += 1
            return entry

    def put(self, key: CacheKey, entry: CacheEntry):
        with self._lock:
            self._entries[key] = entry
            if self.directory is None:
                return
            # Write then rename so a crash never leaves a truncated entry
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "wb") as f:
                pickle.dump(entry, f)
            os.replace(tmp, self._path(key))

    def latest(self, config_hash: str, fold: int, seed: int, max_epochs: int) -> Optional[CacheEntry]:
        """Entry with the most epochs below `max_epochs`, used to resume training"""
        with self._lock:
            candidates: list[CacheKey] = [
                k for k in self._entries
                if k.config_hash == config_hash and k.fold == fold and k.seed == seed and k.epochs < max_epochs
            ]
            if not candidates and self.directory is not None:
                prefix: str = f"{config_hash}-f{fold}-s{seed}-e"
                for path in self.directory.glob(f"{prefix}*.pkl"):
                    epochs: int = int(path.stem[len(prefix):])
                    if epochs < max_epochs:
                        candidates.append(CacheKey(config_hash, fold, seed, epochs))
        if not candidates:
            return None
        best: CacheKey = max(candidates, key=lambda k: k.epochs)
        entry: Optional[CacheEntry] = self._entries.get(best)
        if entry is None:
            with open(self._path(best), "rb") as f:
                entry = pickle.load(f)
        return entry
