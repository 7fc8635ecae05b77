import numpy as np
import pytest

from metatune.dataset import Dataset
from metatune.errors import InvalidBudgetError, InvalidDataError, LeakageError, TrainingDivergedError
from metatune.ga import FeatureMask
from metatune.search_space import Configuration
from metatune.synthetic import synth_generate
from metatune.trainer import ObjectiveSpec, TrainerConfig, train_and_score


def split(data: Dataset, n_val: int) -> tuple[Dataset, Dataset]:
    positives = [s for s, y in data.subjects() if y == 1]
    negatives = [s for s, y in data.subjects() if y == 0]
    val = positives[:n_val // 2] + negatives[:n_val - n_val // 2]
    return data.subset([s for s, _ in data.subjects() if s not in val]), data.subset(val)


@pytest.fixture(scope="module")
def separable() -> tuple[Dataset, Dataset]:
    data = synth_generate(n_subjects=20, windows_per_subject=10, n_features=2, n_informative=2,
                          class_sep=6.0, subject_effect_sd=0.0, seed=3)
    return split(data, 6)


@pytest.fixture(scope="module")
def small() -> tuple[Dataset, Dataset]:
    data = synth_generate(n_subjects=10, windows_per_subject=6, n_features=4, n_informative=2,
                          class_sep=2.0, seed=1)
    return split(data, 3)


def test_zero_epochs_rejected():
    with pytest.raises(InvalidBudgetError):
        TrainerConfig(epochs=0)


@pytest.mark.parametrize("kwargs", [
    dict(learning_rate=0.0),
    dict(dropout=1.0),
    dict(loss="hinge"),
    dict(optimizer_kind="rmsprop"),
    dict(threshold=1.0),
])
def test_invalid_trainer_config(kwargs):
    with pytest.raises(ValueError):
        TrainerConfig(**kwargs)


def test_separable_data_is_learned(separable):
    train, val = separable
    result = train_and_score(TrainerConfig(epochs=50, seed=0), train, val)
    assert result.metrics.f1 >= 0.95
    assert result.objective == pytest.approx(-result.primary)
    assert result.trained_epochs == 50


def test_training_is_deterministic(small):
    train, val = small
    cfg = TrainerConfig(epochs=4, seed=7, dropout=0.3)
    a = train_and_score(cfg, train, val)
    b = train_and_score(cfg, train, val)
    assert a.objective == b.objective
    assert all(np.array_equal(p, q) for p, q in zip(a.checkpoint.params, b.checkpoint.params))


def test_resume_reproduces_a_fresh_run(small):
    train, val = small
    short = train_and_score(TrainerConfig(epochs=3, seed=2, dropout=0.3), train, val)
    resumed = train_and_score(TrainerConfig(epochs=6, seed=2, dropout=0.3), train, val, resume=short.checkpoint)
    fresh = train_and_score(TrainerConfig(epochs=6, seed=2, dropout=0.3), train, val)
    assert resumed.trained_epochs == 3
    assert fresh.trained_epochs == 6
    assert all(np.array_equal(p, q) for p, q in zip(resumed.checkpoint.params, fresh.checkpoint.params))
    assert resumed.objective == fresh.objective


def test_resume_is_ignored_for_another_configuration(small):
    train, val = small
    other = train_and_score(TrainerConfig(epochs=2, seed=2, learning_rate=0.01), train, val)
    result = train_and_score(TrainerConfig(epochs=4, seed=2), train, val, resume=other.checkpoint)
    assert result.trained_epochs == 4


def test_adamw_matches_adam_without_weight_decay(small):
    train, val = small
    adam = train_and_score(TrainerConfig(epochs=3, optimizer_kind="adam"), train, val)
    adamw = train_and_score(TrainerConfig(epochs=3, optimizer_kind="adamw"), train, val)
    assert all(np.array_equal(p, q) for p, q in zip(adam.checkpoint.params, adamw.checkpoint.params))

    adam = train_and_score(TrainerConfig(epochs=3, optimizer_kind="adam", weight_decay=0.1), train, val)
    adamw = train_and_score(TrainerConfig(epochs=3, optimizer_kind="adamw", weight_decay=0.1), train, val)
    assert not all(np.array_equal(p, q) for p, q in zip(adam.checkpoint.params, adamw.checkpoint.params))


def test_subject_leakage_is_rejected(small):
    train, val = small
    with pytest.raises(LeakageError):
        train_and_score(TrainerConfig(epochs=1), train, train)


def test_empty_split_is_rejected(small):
    train, _ = small
    with pytest.raises(InvalidDataError):
        train_and_score(TrainerConfig(epochs=1), train, train.subset([]))


def test_feature_mask_penalty(small):
    train, val = small
    mask = FeatureMask((True, False, True, False))
    spec = ObjectiveSpec(feature_penalty=0.5)
    result = train_and_score(TrainerConfig(epochs=2), train, val, mask=mask, spec=spec)
    assert result.objective == pytest.approx(-result.primary + 0.5 * 0.5)


def test_size_penalty_grows_with_the_network(small):
    train, val = small
    spec = ObjectiveSpec(secondary_penalty_weight=1.0)
    narrow = train_and_score(TrainerConfig(epochs=1, hidden_units=8), train, val, spec=spec)
    wide = train_and_score(TrainerConfig(epochs=1, hidden_units=256, num_layers=2), train, val, spec=spec)
    assert 0 < narrow.size_norm < wide.size_norm <= 1


def test_divergence_is_reported(small):
    train, val = small
    cfg = TrainerConfig(epochs=3, learning_rate=1e300, optimizer_kind="sgd", dropout=0.0)
    with pytest.raises(TrainingDivergedError):
        train_and_score(cfg, train, val)


def test_from_configuration_ignores_unknown_names():
    config = Configuration({"learning_rate": 0.01, "batch_size": 16, "attention_heads": 4, "colour": "red"})
    cfg = TrainerConfig.from_configuration(config, TrainerConfig(hidden_units=128), epochs=7)
    assert (cfg.learning_rate, cfg.batch_size, cfg.hidden_units, cfg.epochs) == (0.01, 16, 128, 7)
    assert cfg.attention_heads == 4


def test_fingerprint_ignores_the_budget():
    assert TrainerConfig(epochs=3).fingerprint() == TrainerConfig(epochs=9).fingerprint()
    assert TrainerConfig(seed=1).fingerprint() != TrainerConfig(seed=2).fingerprint()
