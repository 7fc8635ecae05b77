"""
Training objective: fit a small MLP under a decoded configuration and score it.

Determinism: the initial weights depend on the seed only, and epoch e shuffles and draws
dropout masks from a generator seeded with (seed, e). Resuming a checkpoint taken after
k epochs therefore reproduces a fresh run of the same length bit for bit.
"""

import copy
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from logging import Logger
from typing import Optional

import numpy as np
from scipy.special import expit

from metatune.dataset import Dataset, NormStats, class_weights, zscore
from metatune.errors import InvalidBudgetError, InvalidDataError, LeakageError, TrainingDivergedError
from metatune.ga import FeatureMask
from metatune.losses import LossKind, loss
from metatune.metrics import MetricsReport, score_report
from metatune.network import Network
from metatune.search_space import Configuration
from metatune.seeds import derive_seed

log: Logger = logging.getLogger(__name__)

OPTIMIZER_KINDS: tuple[str, ...] = ("sgd", "adam", "adamw")
SGD_MOMENTUM: float = 0.9
ADAM_BETA1: float = 0.9
ADAM_BETA2: float = 0.999
ADAM_EPS: float = 1e-8


@dataclass
class TrainerConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    dropout: float = 0.2
    hidden_units: int = 64
    num_layers: int = 1
    loss: str = "weighted_bce"
    optimizer_kind: str = "adam"
    weight_decay: float = 0.0
    epochs: int = 20
    seed: int = 0
    gamma: float = 2.0
    """Focal loss focusing parameter"""

    threshold: float = 0.5
    """Decision threshold on the sigmoid output for confusion-based metrics"""

    attention_heads: Optional[int] = None
    """Accepted for compatibility with the default space, not used by the MLP"""

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.hidden_units < 1 or self.num_layers < 1:
            raise ValueError("hidden_units and num_layers must be >= 1")
        LossKind(self.loss)
        if self.optimizer_kind not in OPTIMIZER_KINDS:
            raise ValueError(f"optimizer_kind must be one of {OPTIMIZER_KINDS}")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        check_epochs(self.epochs)

    @staticmethod
    def from_configuration(
            config: Configuration,
            base: Optional["TrainerConfig"] = None,
            **overrides
    ) -> "TrainerConfig":
        """Trainer settings from a decoded configuration on top of `base`; unknown names are ignored"""
        known: set[str] = {f.name for f in fields(TrainerConfig)}
        values: dict = asdict(base) if base is not None else {}
        values.update({name: config[name] for name in config if name in known})
        values.update(overrides)
        return TrainerConfig(**values)

    def fingerprint(self) -> str:
        """Hash of everything but the epoch budget (checkpoints of one run share it)"""
        data: dict = asdict(self)
        data.pop("epochs")
        data.pop("attention_heads")
        text: str = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def check_epochs(epochs: int):
    if epochs < 1:
        raise InvalidBudgetError(f"Training budget must be >= 1 epoch, got {epochs}")


@dataclass
class ObjectiveSpec:
    primary_metric: str = "f1"
    """Validation metric to maximize: f1 or auc"""

    secondary_penalty_weight: float = 0.0
    """Weight of the normalized model size"""

    feature_penalty: float = 0.01
    """Weight of the selected-feature fraction (feature selection only)"""

    max_hidden_units: int = 512
    max_layers: int = 3
    """Largest configurable network, used to normalize model size"""

    def __post_init__(self):
        if self.primary_metric not in ("f1", "auc"):
            raise ValueError("primary_metric must be f1 or auc")
        if self.secondary_penalty_weight < 0 or self.feature_penalty < 0:
            raise ValueError("penalty weights must be >= 0")

    def scalarize(self, primary: float, size_norm: float, mask_fraction: float) -> float:
        return -primary + self.secondary_penalty_weight * size_norm + self.feature_penalty * mask_fraction


@dataclass
class OptimizerState:
    kind: str
    first: list[np.ndarray] = field(default_factory=list)
    """SGD velocity or Adam first moment"""

    second: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    @staticmethod
    def create(kind: str, params: list[np.ndarray]) -> "OptimizerState":
        return OptimizerState(
            kind=kind,
            first=[np.zeros_like(p) for p in params],
            second=[np.zeros_like(p) for p in params],
        )

    def apply(self, params: list[np.ndarray], grads: list[np.ndarray], lr: float, weight_decay: float):
        """One in-place update; Adam couples weight decay into the gradient, AdamW decouples it"""
        self.step += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            if self.kind in ("sgd", "adam") and weight_decay > 0:
                g = g + weight_decay * p
            if self.kind == "sgd":
                self.first[i] = SGD_MOMENTUM * self.first[i] + g
                p -= lr * self.first[i]
                continue
            self.first[i] = ADAM_BETA1 * self.first[i] + (1 - ADAM_BETA1) * g
            self.second[i] = ADAM_BETA2 * self.second[i] + (1 - ADAM_BETA2) * g * g
            m_hat: np.ndarray = self.first[i] / (1 - ADAM_BETA1 ** self.step)
            v_hat: np.ndarray = self.second[i] / (1 - ADAM_BETA2 ** self.step)
            update: np.ndarray = m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            if self.kind == "adamw" and weight_decay > 0:
                update = update + weight_decay * p
            p -= lr * update


@dataclass
class Checkpoint:
    """Resumable training state after `epochs` epochs"""

    config_fingerprint: str
    data_fingerprint: str
    epochs: int
    params: list[np.ndarray]
    optimizer: OptimizerState


@dataclass
class TrainResult:
    objective: float
    metrics: MetricsReport
    checkpoint: Checkpoint
    trained_epochs: int
    """Epochs trained by this call (fewer than cfg.epochs when resumed)"""

    primary: float
    size_norm: float
    scores: np.ndarray = field(default_factory=lambda: np.zeros(0))
    """Validation probabilities, in row order of the validation split"""

    penalty: float = 0.0
    """Size and mask terms of the objective (objective = -primary + penalty)"""


def _check_splits(train: Dataset, val: Dataset):
    if len(train) == 0 or len(val) == 0:
        raise InvalidDataError("Train and validation splits must be non-empty")
    shared: set = set(train.subject_ids.tolist()) & set(val.subject_ids.tolist())
    if shared:
        raise LeakageError(f"Subjects on both sides of the split: {sorted(shared)[:5]}")


def data_fingerprint(train: Dataset, val: Dataset, mask: Optional[FeatureMask], norm_clip: Optional[float]) -> str:
    """Identity of the inputs a checkpoint was trained on"""
    return f"{train.fingerprint()}:{val.fingerprint()}:{mask}:{norm_clip}"


def train_and_score(
        cfg: TrainerConfig,
        train: Dataset,
        val: Dataset,
        mask: Optional[FeatureMask] = None,
        spec: Optional[ObjectiveSpec] = None,
        resume: Optional[Checkpoint] = None,
        norm_clip: Optional[float] = None
) -> TrainResult:
    """Trains for cfg.epochs and scores the validation split

    Args:
        cfg (TrainerConfig): hyperparameters and budget
        train (Dataset): training split (possibly oversampled)
        val (Dataset): validation split, subject-disjoint from train
        mask (Optional[FeatureMask]): feature subset, all features when None
        spec (Optional[ObjectiveSpec]): scalarization settings
        resume (Optional[Checkpoint]): state of the same run at fewer epochs
        norm_clip (Optional[float]): bound on |z| after normalization

    Raises:
        InvalidBudgetError: if cfg.epochs < 1
        InvalidDataError: if a split is empty
        LeakageError: if a subject appears in both splits
        TrainingDivergedError: if the loss or the weights become non-finite

    Returns:
        TrainResult: scalar objective (lower is better), validation report and checkpoint
    """
    check_epochs(cfg.epochs)
    _check_splits(train, val)
    spec = spec or ObjectiveSpec()

    x_train: np.ndarray = train.features
    x_val: np.ndarray = val.features
    if mask is not None:
        x_train = mask.apply(x_train)
        x_val = mask.apply(x_val)
    stats: NormStats = zscore(x_train, clip=norm_clip)
    x_train = stats.apply(x_train)
    x_val = stats.apply(x_val)
    y_train: np.ndarray = train.labels
    weights: np.ndarray = class_weights(y_train)

    config_key: str = cfg.fingerprint()
    data_key: str = data_fingerprint(train, val, mask, norm_clip)
    net: Network = Network(
        x_train.shape[1], cfg.hidden_units, cfg.num_layers, cfg.dropout,
        np.random.default_rng(derive_seed(cfg.seed, "init")),
    )
    optim: OptimizerState = OptimizerState.create(cfg.optimizer_kind, net.parameters())
    start: int = 0
    if resume is not None and resume.config_fingerprint == config_key \
            and resume.data_fingerprint == data_key and resume.epochs <= cfg.epochs:
        net.load_state(resume.params)
        optim = copy.deepcopy(resume.optimizer)
        start = resume.epochs

    n: int = len(y_train)
    for epoch in range(start, cfg.epochs):
        rng: np.random.Generator = np.random.default_rng([cfg.seed, epoch])
        order: np.ndarray = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch: np.ndarray = order[lo:lo + cfg.batch_size]
            logits, cache = net.forward(x_train[batch], train=True, rng=rng)
            p: np.ndarray = expit(logits)
            value, grad_logits = loss(cfg.loss, p, y_train[batch], weights, cfg.gamma)
            if not math.isfinite(value):
                raise TrainingDivergedError(f"Loss became {value} at epoch {epoch}")
            params: list[np.ndarray] = net.parameters()
            optim.apply(params, net.backward(cache, grad_logits), cfg.learning_rate, cfg.weight_decay)
        if not all(np.isfinite(p).all() for p in net.parameters()):
            raise TrainingDivergedError(f"Weights became non-finite at epoch {epoch}")

    scores: np.ndarray = net.predict_proba(x_val)
    report: MetricsReport = score_report(scores, val.labels, cfg.threshold)
    primary: float = report.get(spec.primary_metric)
    if math.isnan(primary):
        log.warning(f"Validation {spec.primary_metric} is undefined, scored as 0")
        primary = 0.0
    size_norm: float = net.n_params / Network.count_params(x_train.shape[1], spec.max_hidden_units, spec.max_layers)
    fraction: float = mask.fraction if mask is not None else 0.0
    objective: float = spec.scalarize(primary, size_norm, fraction)
    penalty: float = spec.scalarize(0.0, size_norm, fraction)

    checkpoint: Checkpoint = Checkpoint(
        config_fingerprint=config_key,
        data_fingerprint=data_key,
        epochs=cfg.epochs,
        params=net.state(),
        optimizer=copy.deepcopy(optim),
    )
    return TrainResult(
        objective=objective,
        metrics=report,
        checkpoint=checkpoint,
        trained_epochs=cfg.epochs - start,
        primary=primary,
        size_norm=size_norm,
        scores=scores,
        penalty=penalty,
    )
