import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit


def dropout_mask(shape: tuple[int, ...], rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: kept units are scaled by 1 / (1 - rate)"""
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


@dataclass
class ForwardCache:
    activations: list[np.ndarray] = field(default_factory=list)
    """Input of every layer (post-dropout for hidden layers)"""

    pre_activations: list[np.ndarray] = field(default_factory=list)
    masks: list[Optional[np.ndarray]] = field(default_factory=list)


class Network:
    """Fully connected binary classifier: ReLU hidden layers with dropout, one sigmoid output

    Weights use He initialization, biases start at zero. Everything runs in float64.
    """

    def __init__(self, n_inputs: int, hidden_units: int, num_layers: int, dropout: float, rng: np.random.Generator):
        if n_inputs < 1 or hidden_units < 1 or num_layers < 1:
            raise ValueError("n_inputs, hidden_units and num_layers must be >= 1")
        self.dropout: float = dropout
        sizes: list[int] = [n_inputs] + [hidden_units] * num_layers + [1]
        self.weights: list[np.ndarray] = [
            rng.normal(0.0, math.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            for fan_in, fan_out in zip(sizes[:-1], sizes[1:])
        ]
        self.biases: list[np.ndarray] = [np.zeros(fan_out) for fan_out in sizes[1:]]

    @staticmethod
    def count_params(n_inputs: int, hidden_units: int, num_layers: int) -> int:
        sizes: list[int] = [n_inputs] + [hidden_units] * num_layers + [1]
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self) -> list[np.ndarray]:
        return [*self.weights, *self.biases]

    def forward(
            self,
            x: np.ndarray,
            train: bool = False,
            rng: Optional[np.random.Generator] = None
    ) -> tuple[np.ndarray, ForwardCache]:
        """Logits of a batch; dropout is only applied when `train` is set"""
        cache: ForwardCache = ForwardCache()
        h: np.ndarray = x
        last: int = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            cache.activations.append(h)
            z: np.ndarray = h @ w + b
            if i == last:
                return z[:, 0], cache
            cache.pre_activations.append(z)
            h = np.maximum(z, 0.0)
            mask: Optional[np.ndarray] = None
            if train and self.dropout > 0.0:
                if rng is None:
                    raise ValueError("Training forward pass needs a generator for dropout")
                mask = dropout_mask(h.shape, self.dropout, rng)
                h = h * mask
            cache.masks.append(mask)
        raise AssertionError("unreachable")

    def backward(self, cache: ForwardCache, grad_logits: np.ndarray) -> list[np.ndarray]:
        """Gradients in `parameters()` order (weights then biases)"""
        grad_w: list[np.ndarray] = [np.empty(0)] * len(self.weights)
        grad_b: list[np.ndarray] = [np.empty(0)] * len(self.biases)
        delta: np.ndarray = grad_logits[:, None]
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = cache.activations[i].T @ delta
            grad_b[i] = delta.sum(axis=0)
            if i == 0:
                break
            delta = delta @ self.weights[i].T
            mask: Optional[np.ndarray] = cache.masks[i - 1]
            if mask is not None:
                delta = delta * mask
            delta = delta * (cache.pre_activations[i - 1] > 0)
        return [*grad_w, *grad_b]

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        logits, _ = self.forward(x)
        return expit(logits)

    def state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def load_state(self, params: list[np.ndarray]):
        n: int = len(self.weights)
        self.weights = [p.copy() for p in params[:n]]
        self.biases = [p.copy() for p in params[n:]]
