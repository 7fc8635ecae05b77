"""
Subject-wise cross-validation plans.

Folds are built over subjects, never over rows, so every window of a subject lands on
the same side of a split. Stratification uses the subject-level label.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from logging import Logger
from typing import Hashable, Sequence

import numpy as np
from sklearn.model_selection import KFold

from metatune.errors import InvalidPlanError, LeakageError

log: Logger = logging.getLogger(__name__)


class CvKind(Enum):
    KFOLD = "kfold"
    LOSO = "loso"


@dataclass(frozen=True)
class Fold:
    index: int
    train_subjects: frozenset
    test_subjects: frozenset


@dataclass(frozen=True)
class CvPlan:
    folds: tuple[Fold, ...]
    k: int
    kind: CvKind

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)

    @property
    def subjects(self) -> frozenset:
        return frozenset().union(*(f.test_subjects for f in self.folds))

    def validate(self):
        """Checks subject disjointness and that test sets partition the subjects

        Raises:
            LeakageError: on any violation
        """
        universe: frozenset = self.subjects
        seen: set = set()
        for fold in self.folds:
            if fold.train_subjects & fold.test_subjects:
                raise LeakageError(f"Fold {fold.index} shares subjects between train and test")
            if fold.train_subjects | fold.test_subjects != universe:
                raise LeakageError(f"Fold {fold.index} does not cover every subject")
            if seen & fold.test_subjects:
                raise LeakageError(f"Fold {fold.index} repeats a test subject")
            seen |= fold.test_subjects

    def fingerprint(self) -> str:
        """Stable hash of the plan, used to check that two runs are comparable"""
        payload: list = [sorted(str(s) for s in fold.test_subjects) for fold in self.folds]
        text: str = json.dumps({"kind": self.kind.value, "k": self.k, "folds": payload})
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "k": self.k,
            "folds": [sorted(str(s) for s in fold.test_subjects) for fold in self.folds],
        }


def _deal_stratified(labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per subject: each class is shuffled and dealt round-robin, the deal
    continuing across classes so that fold sizes and per-class counts differ by at most 1"""
    fold_of: np.ndarray = np.empty(len(labels), dtype=int)
    position: int = 0
    for label in (1, 0):
        members: np.ndarray = rng.permutation(np.flatnonzero(labels == label))
        fold_of[members] = (position + np.arange(len(members))) % k
        position += len(members)
    return fold_of


def make_cv_plan(
        subjects: Sequence[tuple[Hashable, int]],
        k: int = 5,
        kind: CvKind | str = CvKind.KFOLD,
        stratified: bool = True,
        seed: int = 0
) -> CvPlan:
    """Assigns whole subjects to folds

    Args:
        subjects (Sequence[tuple[Hashable, int]]): (subject id, subject-level label) pairs
        k (int): number of folds (ignored for LOSO)
        kind (CvKind | str): k-fold or leave-one-subject-out
        stratified (bool): balance positive subjects across folds
        seed (int): shuffling seed

    Raises:
        InvalidPlanError: on duplicate ids, fewer than 2 subjects or k outside [2, n]

    Returns:
        CvPlan: the plan, validated
    """
    kind = CvKind(kind)
    ids: list = [s for s, _ in subjects]
    if len(set(ids)) != len(ids):
        raise InvalidPlanError("Subject ids must be unique")
    if len(ids) < 2:
        raise InvalidPlanError("Cross-validation needs at least 2 subjects")

    # Input order must not matter
    ordered: list[tuple[Hashable, int]] = sorted(subjects, key=lambda s: str(s[0]))
    ids = [s for s, _ in ordered]
    labels: np.ndarray = np.array([int(label) for _, label in ordered])
    if not np.isin(labels, (0, 1)).all():
        raise InvalidPlanError("Subject labels must be binary")
    universe: frozenset = frozenset(ids)

    if kind == CvKind.LOSO:
        test_sets: list[list] = [[s] for s in ids]
        k = len(ids)
    else:
        if not 2 <= k <= len(ids):
            raise InvalidPlanError(f"k={k} is not within [2, {len(ids)}] subjects")
        if stratified:
            fold_of: np.ndarray = _deal_stratified(labels, k, np.random.default_rng(seed))
            test_sets = [[ids[i] for i in np.flatnonzero(fold_of == f)] for f in range(k)]
        else:
            splits = KFold(n_splits=k, shuffle=True, random_state=seed).split(np.zeros(len(ids)))
            test_sets = [[ids[i] for i in test_idx] for _, test_idx in splits]

    folds: tuple[Fold, ...] = tuple(
        Fold(index=i, train_subjects=universe - frozenset(test), test_subjects=frozenset(test))
        for i, test in enumerate(test_sets)
    )
    plan: CvPlan = CvPlan(folds=folds, k=k, kind=kind)
    plan.validate()
    log.debug(f"CV plan {kind.value}: {k} folds over {len(ids)} subjects")
    return plan
