"""
Feature-matrix datasets with subject identity.

Rows are windows (or utterances), labels are binary and subject-level, and every row
carries the id of the subject it was recorded from so that splits can stay subject-wise.
"""

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from logging import Logger
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from sklearn.neighbors import NearestNeighbors

from metatune.errors import IngestionError, InvalidDataError, InvalidWeightsError, OversamplingError

log: Logger = logging.getLogger(__name__)

LABEL_ALPHABETS: tuple[tuple[str, str], ...] = (("0", "1"), ("false", "true"), ("no", "yes"))
"""Accepted (negative, positive) spellings, compared case-insensitively"""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    subject_ids: np.ndarray
    feature_names: tuple[str, ...] = ()
    synthetic: Optional[np.ndarray] = None
    """True for rows produced by oversampling"""

    def __post_init__(self):
        features: np.ndarray = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise InvalidDataError("Features must be a 2-D matrix")
        labels: np.ndarray = np.asarray(self.labels).astype(int)
        subject_ids: np.ndarray = np.asarray([str(s) for s in self.subject_ids], dtype=str)
        n: int = features.shape[0]
        if len(labels) != n or len(subject_ids) != n:
            raise InvalidDataError(
                f"Row counts disagree: {n} feature rows, {len(labels)} labels, {len(subject_ids)} subject ids"
            )
        if not np.isin(labels, (0, 1)).all():
            raise InvalidDataError("Labels must be binary")
        if not np.isfinite(features).all():
            raise InvalidDataError("Features contain non-finite values")
        names: tuple[str, ...] = tuple(self.feature_names) or tuple(f"f{i}" for i in range(features.shape[1]))
        if len(names) != features.shape[1]:
            raise InvalidDataError(f"{len(names)} feature names for {features.shape[1]} features")
        synthetic: np.ndarray = (
            np.zeros(n, dtype=bool) if self.synthetic is None else np.asarray(self.synthetic, dtype=bool)
        )

        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "subject_ids", subject_ids)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "synthetic", synthetic)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subjects(self) -> list[tuple[str, int]]:
        """(subject id, subject-level label) pairs, sorted by id

        A subject is positive if any of its rows is.
        """
        out: dict[str, int] = {}
        for s, y in zip(self.subject_ids, self.labels):
            out[s] = max(out.get(s, 0), int(y))
        return sorted(out.items())

    def subset(self, subject_ids: Iterable[str]) -> "Dataset":
        keep: np.ndarray = np.isin(self.subject_ids, [str(s) for s in subject_ids])
        return self.take(keep)

    def take(self, rows: np.ndarray) -> "Dataset":
        return Dataset(
            features=self.features[rows],
            labels=self.labels[rows],
            subject_ids=self.subject_ids[rows],
            feature_names=self.feature_names,
            synthetic=self.synthetic[rows],
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(self.labels.astype(np.int64).tobytes())
        h.update("\n".join(self.subject_ids.tolist()).encode("utf-8"))
        return h.hexdigest()

    def to_csv(self, path: Path, subject_column: str = "subject", label_column: str = "label"):
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow([subject_column, label_column, *self.feature_names])
            for s, y, row in zip(self.subject_ids, self.labels, self.features):
                writer.writerow([s, int(y), *(repr(float(v)) for v in row)])


@dataclass
class CsvSchema:
    subject_column: str = "subject"
    label_column: str = "label"
    feature_columns: Optional[list[str]] = None
    """Feature columns to keep; all remaining columns when None"""


def _label_of(raw: str, row: int, alphabet: Optional[tuple[str, str]]) -> tuple[int, tuple[str, str]]:
    value: str = raw.strip().lower()
    for candidate in LABEL_ALPHABETS:
        if value in candidate:
            if alphabet is not None and candidate != alphabet:
                raise IngestionError(f"label '{raw}' mixes label alphabets {alphabet} and {candidate}", row)
            return candidate.index(value), candidate
    raise IngestionError(f"label '{raw}' is not binary", row)


def load_csv(path: Path, schema: Optional[CsvSchema] = None) -> Dataset:
    """Reads a dataset from a CSV file with a header row

    Row numbers in errors count data rows from 1.

    Raises:
        FileNotFoundError: if the file does not exist
        IngestionError: on missing or duplicated columns, empty files, unparseable or
            non-finite values and invalid labels
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if not path.exists():
        log.error(f"Dataset not found: {path}")
        raise FileNotFoundError(f"Dataset not found: {path}")

    with open(path, newline="", encoding="utf-8") as f:
        rows: list[list[str]] = [r for r in csv.reader(f) if any(cell.strip() for cell in r)]
    if not rows:
        raise IngestionError(f"{path} is empty")

    header: list[str] = [h.strip() for h in rows[0]]
    duplicates: set[str] = {h for h in header if header.count(h) > 1}
    if duplicates:
        raise IngestionError(f"duplicated columns {sorted(duplicates)}")
    for required in (schema.subject_column, schema.label_column):
        if required not in header:
            raise IngestionError(f"missing column '{required}'")
    feature_columns: list[str] = schema.feature_columns or [
        h for h in header if h not in (schema.subject_column, schema.label_column)
    ]
    missing: list[str] = [c for c in feature_columns if c not in header]
    if missing:
        raise IngestionError(f"missing feature columns {missing}")
    if not feature_columns:
        raise IngestionError("no feature column")
    if len(rows) == 1:
        raise IngestionError(f"{path} has a header but no data")

    subject_idx: int = header.index(schema.subject_column)
    label_idx: int = header.index(schema.label_column)
    feature_idx: list[int] = [header.index(c) for c in feature_columns]

    features: list[list[float]] = []
    labels: list[int] = []
    subjects: list[str] = []
    alphabet: Optional[tuple[str, str]] = None
    for i, raw in enumerate(rows[1:], start=1):
        if len(raw) != len(header):
            raise IngestionError(f"{len(raw)} fields for {len(header)} columns", i)
        subject: str = raw[subject_idx].strip()
        if not subject:
            raise IngestionError("empty subject id", i)
        label, alphabet = _label_of(raw[label_idx], i, alphabet)
        values: list[float] = []
        for j in feature_idx:
            try:
                v: float = float(raw[j])
            except ValueError:
                raise IngestionError(f"value '{raw[j]}' of column '{header[j]}' is not a number", i)
            if not math.isfinite(v):
                raise IngestionError(f"value '{raw[j]}' of column '{header[j]}' is not finite", i)
            values.append(v)
        features.append(values)
        labels.append(label)
        subjects.append(subject)

    dataset: Dataset = Dataset(
        features=np.array(features, dtype=float),
        labels=np.array(labels),
        subject_ids=np.array(subjects),
        feature_names=tuple(feature_columns),
    )
    log.info(f"Loaded {len(dataset)} rows, {dataset.n_features} features, {len(dataset.subjects())} subjects from {path}")
    return dataset


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    """Features with zero spread on the train split, mapped to 0"""

    clip: Optional[float] = None
    """Optional bound applied to |z| after normalization"""

    def apply(self, features: np.ndarray) -> np.ndarray:
        x: np.ndarray = np.asarray(features, dtype=float)
        if x.shape[1] != len(self.mean):
            raise InvalidDataError(f"Statistics fit on {len(self.mean)} features applied to {x.shape[1]}")
        scale: np.ndarray = np.where(self.constant, 1.0, self.std)
        z: np.ndarray = np.where(self.constant, 0.0, (x - self.mean) / scale)
        if self.clip is not None:
            z = np.clip(z, -self.clip, self.clip)
        return z

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.mean.tobytes())
        h.update(self.std.tobytes())
        h.update(str(self.clip).encode("utf-8"))
        return h.hexdigest()


def zscore(train: Dataset | np.ndarray, clip: Optional[float] = None) -> NormStats:
    """Per-feature mean and standard deviation of the train split

    Raises:
        InvalidDataError: if the split is empty
    """
    x: np.ndarray = train.features if isinstance(train, Dataset) else np.asarray(train, dtype=float)
    if x.shape[0] == 0:
        raise InvalidDataError("Cannot fit normalization on an empty split")
    if clip is not None and clip <= 0:
        raise ValueError("clip must be > 0")
    mean: np.ndarray = x.mean(axis=0)
    std: np.ndarray = x.std(axis=0)
    constant: np.ndarray = std == 0
    if constant.any():
        log.warning(f"Constant features {np.flatnonzero(constant).tolist()} mapped to 0")
    return NormStats(mean=mean, std=std, constant=constant, clip=clip)


def zscore_apply(stats: NormStats, split: Dataset) -> Dataset:
    """Normalizes any split with statistics fit elsewhere (never refit)"""
    return replace(split, features=stats.apply(split.features))


def class_weights(labels: Sequence[int] | np.ndarray) -> np.ndarray:
    """Inverse-frequency weights [w_neg, w_pos] with w_c = N / (2 * N_c)

    Raises:
        InvalidWeightsError: if a class is absent
    """
    y: np.ndarray = np.asarray(labels).astype(int)
    counts: np.ndarray = np.bincount(y, minlength=2)
    if len(counts) != 2 or (counts == 0).any():
        raise InvalidWeightsError("Class weights need both classes")
    return len(y) / (2.0 * counts)


def smote(train: Dataset, k: int = 5, target_ratio: float = 1.0, seed: int = 0) -> Dataset:
    """Adds interpolated minority rows until minority / majority >= target_ratio

    Every synthetic row lies on the segment between a minority row and one of its k
    nearest minority neighbors (Euclidean), inherits that row's subject id and is
    flagged synthetic. Apply to training folds only.

    Raises:
        OversamplingError: if the minority class has fewer than 2 rows
    """
    if k < 1:
        raise OversamplingError("k must be >= 1")
    if target_ratio <= 0:
        raise OversamplingError("target_ratio must be > 0")
    counts: np.ndarray = np.bincount(train.labels, minlength=2)
    minority: int = int(np.argmin(counts))
    n_min: int = int(counts[minority])
    n_maj: int = int(counts[1 - minority])
    if n_maj == 0 or n_min / n_maj >= target_ratio:
        return train
    if n_min < 2:
        raise OversamplingError(f"Minority class has {n_min} row(s), at least 2 are needed")

    n_new: int = math.ceil(target_ratio * n_maj) - n_min
    rows: np.ndarray = np.flatnonzero(train.labels == minority)
    x_min: np.ndarray = train.features[rows]
    k_eff: int = min(k, n_min - 1)

    neighbors: np.ndarray = NearestNeighbors(n_neighbors=k_eff + 1).fit(x_min).kneighbors(x_min, return_distance=False)
    # First column is the point itself
    neighbors = neighbors[:, 1:]

    rng: np.random.Generator = np.random.default_rng(seed)
    source: np.ndarray = rng.integers(n_min, size=n_new)
    partner: np.ndarray = neighbors[source, rng.integers(k_eff, size=n_new)]
    u: np.ndarray = rng.random((n_new, 1))
    new_x: np.ndarray = x_min[source] + u * (x_min[partner] - x_min[source])

    log.debug(f"SMOTE: {n_new} synthetic rows for class {minority} ({n_min} -> {n_min + n_new} vs {n_maj})")
    return Dataset(
        features=np.vstack([train.features, new_x]),
        labels=np.r_[train.labels, np.full(n_new, minority)],
        subject_ids=np.r_[train.subject_ids, train.subject_ids[rows][source]],
        feature_names=train.feature_names,
        synthetic=np.r_[train.synthetic, np.ones(n_new, dtype=bool)],
    )
