from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_convergence(histories: Mapping[str, Sequence[float]], path: Path, title: str = "Convergence") -> Path:
    """Best-so-far objective per round, one line per run"""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, history in histories.items():
        values: np.ndarray = np.asarray(history, dtype=float)
        if len(values) == 0:
            continue
        best: np.ndarray = np.minimum.accumulate(np.where(np.isfinite(values), values, np.inf))
        ax.step(np.arange(1, len(best) + 1), best, where="post", label=label)
    ax.set_xlabel("round")
    ax.set_ylabel("best objective")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    if histories:
        ax.legend()
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
