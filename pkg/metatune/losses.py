"""
Binary classification losses with analytic gradients with respect to the logits.

Both losses are written through p_y, the probability given to the true class, so that
focal loss with gamma = 0 and unit alpha is bit-identical to unweighted cross-entropy.
"""

from enum import Enum
from typing import Optional, Sequence

import numpy as np

from metatune.errors import InvalidWeightsError

EPS: float = 1e-12


class LossKind(Enum):
    WEIGHTED_BCE = "weighted_bce"
    FOCAL = "focal"


def _prepare(p: np.ndarray, y: np.ndarray, class_weights: Optional[Sequence[float]]):
    p = np.asarray(p, dtype=float)
    y = np.asarray(y).astype(int)
    weights: np.ndarray = np.ones(2) if class_weights is None else np.asarray(class_weights, dtype=float)
    if weights.shape != (2,):
        raise InvalidWeightsError(f"Expected 2 class weights, got {weights.size}")
    p_clamped: np.ndarray = np.clip(p, EPS, 1.0 - EPS)
    p_y: np.ndarray = np.where(y == 1, p_clamped, 1.0 - p_clamped)
    sign: np.ndarray = np.where(y == 1, 1.0, -1.0)
    return p, y, weights[y], p_y, sign


def weighted_bce(
        p: np.ndarray,
        y: np.ndarray,
        class_weights: Optional[Sequence[float]] = None
) -> tuple[float, np.ndarray]:
    """-sum(w_y * log p_y) / N and its gradient w_y * (p - y) / N"""
    p, y, w, p_y, _ = _prepare(p, y, class_weights)
    n: int = len(p)
    value: float = float(-np.sum(w * np.log(p_y)) / n)
    return value, w * (p - y) / n


def focal(
        p: np.ndarray,
        y: np.ndarray,
        class_weights: Optional[Sequence[float]] = None,
        gamma: float = 2.0
) -> tuple[float, np.ndarray]:
    """-sum(alpha_y * (1 - p_y)^gamma * log p_y) / N, alpha_y being the class weight

    With s = +1 for positives and -1 for negatives the logit gradient is
    alpha_y * s * (1 - p_y)^gamma * (gamma * p_y * log p_y - (1 - p_y)) / N.
    """
    p, y, alpha, p_y, sign = _prepare(p, y, class_weights)
    n: int = len(p)
    log_p: np.ndarray = np.log(p_y)
    modulation: np.ndarray = (1.0 - p_y) ** gamma
    value: float = float(-np.sum(alpha * modulation * log_p) / n)
    grad: np.ndarray = alpha * sign * modulation * (gamma * p_y * log_p - (1.0 - p_y)) / n
    return value, grad


def loss(
        kind: LossKind | str,
        p: np.ndarray,
        y: np.ndarray,
        class_weights: Optional[Sequence[float]] = None,
        gamma: float = 2.0
) -> tuple[float, np.ndarray]:
    """Loss value and gradient w.r.t. the logits

    Raises:
        InvalidWeightsError: if `class_weights` does not hold exactly 2 weights
    """
    if LossKind(kind) == LossKind.FOCAL:
        return focal(p, y, class_weights, gamma)
    return weighted_bce(p, y, class_weights)
