import itertools
import json
import math
import time

import numpy as np
import pytest

from metatune.cache import CheckpointCache
from metatune.config import BenchmarkSettings, CvSettings, DataSource, ExperimentConfig
from metatune.cv import make_cv_plan
from metatune.errors import OptimizationFailedError
from metatune.ga import FeatureMask, GaConfig
from metatune.metrics import score_report
from metatune.pso import PsoConfig
from metatune.report import SUMMARY_FILE, load_summary
from metatune.runner import (BEST_CONFIG_FILE, CONFIG_FILE, PLOT_FILE, PROVENANCE_FILE, REPORT_FILE, Candidate,
                             CandidateEvaluator, run_trend, run_tune)
from metatune.search_space import Configuration
from metatune.synthetic import SynthSpec, generate
from metatune.trainer import TrainerConfig
from metatune.trial_log import RUN_LOG, TRIALS_LOG, read_trials


def test_benchmark_smoke(tmp_path):
    config = ExperimentConfig(
        name="sphere",
        benchmark=BenchmarkSettings(dims=2),
        optimizer="pso",
        pso=PsoConfig(swarm_size=10, iterations=20),
        cache=False,
        output_dir=tmp_path,
    )
    summary = run_tune(config)
    assert summary.n_trials == 200
    assert summary.best_value < 1.0
    assert all(a >= b for a, b in zip(summary.history, summary.history[1:]))
    assert summary.repeats == {}
    assert summary.plan_fingerprint is None
    for name in (SUMMARY_FILE, BEST_CONFIG_FILE, REPORT_FILE, PLOT_FILE, CONFIG_FILE, TRIALS_LOG, RUN_LOG):
        assert (tmp_path / name).exists()
    assert load_summary(tmp_path) == summary


def test_results_do_not_depend_on_workers(tiny_config):
    """summary.json is byte-identical; trial records match in every field but the wall-clock duration"""
    serial = tiny_config("serial", workers=1, cache=False)
    threaded = tiny_config("threaded", workers=4, cache=False).model_copy(update={"name": "serial"})
    run_tune(serial)
    run_tune(threaded)
    assert (serial.output_dir / SUMMARY_FILE).read_text() == (threaded.output_dir / SUMMARY_FILE).read_text()
    a = read_trials(serial.output_dir)
    b = read_trials(threaded.output_dir)
    assert [(t.seed, t.objective, t.configuration) for t in a] == [(t.seed, t.objective, t.configuration) for t in b]

    def without_duration(path):
        records = [json.loads(line) for line in (path / TRIALS_LOG).read_text().splitlines()]
        for record in records:
            record.pop("duration")
        return records

    assert without_duration(serial.output_dir) == without_duration(threaded.output_dir)


def test_warm_cache_serves_every_trial(tiny_config):
    config = tiny_config()
    cold = run_tune(config)
    assert not any(t.cache_hit for t in read_trials(config.output_dir))
    cold_text = (config.output_dir / SUMMARY_FILE).read_text()

    warm = run_tune(config)
    trials = read_trials(config.output_dir)
    assert all(t.cache_hit for t in trials)
    assert all(f.trained_epochs == 0 for t in trials for f in t.folds)
    assert (warm.best_value, warm.best_configuration) == (cold.best_value, cold.best_configuration)
    assert (config.output_dir / SUMMARY_FILE).read_text() == cold_text


def test_pso_run_on_a_dataset(tiny_config):
    config = tiny_config()
    summary = run_tune(config)
    trials = read_trials(config.output_dir)
    assert summary.n_trials == len(trials) == 3 * 2 + 2
    assert [t.trial_id for t in trials] == list(range(len(trials)))
    assert [t.phase for t in trials] == ["search"] * 6 + ["repeat"] * 2
    assert len({t.seed for t in trials}) == len(trials)
    assert all(len(t.folds) == 2 for t in trials if t.error is None)
    assert summary.repeats["f1"]["n"] + summary.repeats["f1"]["excluded"] == 4
    assert summary.plan_fingerprint is not None
    assert json.loads((config.output_dir / "plan.json").read_text())["k"] == 2

    best = json.loads((config.output_dir / BEST_CONFIG_FILE).read_text())
    assert set(best) == set(config.search_space().names)
    assert "| pso |" in (config.output_dir / REPORT_FILE).read_text()


@pytest.mark.parametrize("optimizer,n_search", [
    ("ga", 8),
    ("hybrid", 4 + 9),
    ("sh", 4 + 2),
    ("hyperband", 2 + 1 + 2),
    ("feature_select", 8),
    ("baseline", 1),
])
def test_every_optimizer_completes(tiny_config, optimizer, n_search):
    config = tiny_config(optimizer=optimizer)
    summary = run_tune(config)
    trials = read_trials(config.output_dir)
    assert len([t for t in trials if t.phase != "repeat"]) == n_search
    assert len([t for t in trials if t.phase == "repeat"]) == 2
    assert math.isfinite(summary.best_value)
    assert "f1" in summary.repeats


def test_halving_trials_carry_budgets(tiny_config):
    config = tiny_config(optimizer="sh")
    run_tune(config)
    rungs = [t for t in read_trials(config.output_dir) if t.phase == "rung"]
    assert [t.budget for t in rungs] == [1, 1, 1, 1, 2, 2]
    # A promoted candidate keeps its seed and resumes from its shorter run
    first_seeds = {t.seed for t in rungs[:4]}
    assert all(t.seed in first_seeds for t in rungs[4:])
    assert all(f.trained_epochs == 1 for t in rungs[4:] if t.error is None for f in t.folds)
    repeats = [t for t in read_trials(config.output_dir) if t.phase == "repeat"]
    assert all(t.budget == 2 for t in repeats)


def test_feature_selection_reports_a_mask(tiny_config):
    config = tiny_config(optimizer="feature_select")
    summary = run_tune(config)
    mask = summary.best_configuration["mask"]
    assert len(mask) == 4 and set(mask) <= {"0", "1"} and "1" in mask
    assert summary.best_configuration["features"] == [i for i, b in enumerate(mask) if b == "1"]


def test_failed_search_aborts_with_a_flushed_log(tiny_config):
    config = tiny_config(
        optimizer="pso",
        pso=PsoConfig(swarm_size=2, iterations=1),
        space=[{"name": "learning_rate", "kind": "continuous", "lower": 1e299, "upper": 1e300, "scale": "log10"}],
        trainer={"epochs": 2, "optimizer_kind": "sgd", "dropout": 0.0},
    )
    with pytest.raises(OptimizationFailedError):
        run_tune(config)
    trials = read_trials(config.output_dir)
    assert len(trials) == 2
    assert all(t.error and "TrainingDivergedError" in t.error for t in trials)
    assert "Stopping run due to error in Search" in (config.output_dir / RUN_LOG).read_text()


@pytest.mark.slow
def test_trend_writes_medians(tiny_config):
    config = tiny_config("trend")
    result = run_trend(config, seeds=[0, 1])
    assert set(result.medians) == {"baseline", "pso", "ga", "hybrid"}
    assert all(len(v) == 2 for v in result.per_seed_f1.values())
    assert (config.output_dir / "trend.md").exists()
    assert json.loads((config.output_dir / "trend.json").read_text())["seeds"] == [0, 1]


@pytest.mark.slow
def test_tuned_optimizers_rank_above_the_baseline(tiny_config):
    config = tiny_config(
        "trend-full",
        dataset=DataSource(synthetic=SynthSpec(
            n_subjects=40, windows_per_subject=20, n_features=30, n_informative=6, class_sep=1.0, seed=11,
        )),
        pso=PsoConfig(swarm_size=6, iterations=5),
        ga=GaConfig(population=6, generations=5),
        trainer=TrainerConfig(epochs=10),
        cv=CvSettings(k=3),
    )
    result = run_trend(config, seeds=list(range(7)))
    f1 = {name: result.medians[name]["f1"] for name in ("baseline", "pso", "ga", "hybrid")}
    assert result.ordering_holds, f1
    assert f1["hybrid"] >= max(f1["pso"], f1["ga"]) >= f1["baseline"]


def test_trend_needs_a_dataset(tmp_path):
    config = ExperimentConfig(benchmark=BenchmarkSettings(), output_dir=tmp_path)
    with pytest.raises(ValueError):
        run_trend(config, seeds=[0])


def exhaustive_masks(config) -> dict[str, float]:
    """Objective of every feature subset under one training seed (+inf for the empty one)"""
    dataset = generate(config.dataset.synthetic)
    plan = make_cv_plan(dataset.subjects(), k=config.cv.k, seed=config.master_seed)
    evaluator = CandidateEvaluator(config, dataset, plan)
    values: dict[str, float] = {}
    for bits in itertools.product((False, True), repeat=dataset.n_features):
        mask = FeatureMask(bits)
        if mask.n_selected == 0:
            values[str(mask)] = math.inf
            continue
        values[str(mask)], _, _ = evaluator.evaluate(Candidate(Configuration({}), seed=7, phase="search", mask=mask))
    return values


@pytest.mark.slow
def test_feature_selection_agrees_with_exhaustive_search(tiny_config):
    ga_found = oracle_found = ga_near_oracle = 0
    for seed in range(20):
        config = tiny_config(
            f"fs-{seed}",
            optimizer="feature_select",
            dataset=DataSource(synthetic=SynthSpec(
                n_subjects=20, windows_per_subject=10, n_features=6, n_informative=2,
                class_sep=2.0, subject_effect_sd=0.0, seed=seed,
            )),
            ga=GaConfig(population=10, generations=6),
            trainer=TrainerConfig(epochs=15, learning_rate=0.01),
            cv=CvSettings(k=4),
            repeats=1,
            master_seed=seed,
            cache=False,
        )
        mask: str = run_tune(config).best_configuration["mask"]
        ga_found += mask[0] == "1" and mask[1] == "1"

        values = exhaustive_masks(config)
        assert len(values) == 64
        ranking: list[str] = sorted(values, key=lambda m: (values[m], m))
        oracle_found += ranking[0][0] == "1" and ranking[0][1] == "1"
        # The 16 supersets of the informative pair should fill the top of the ranking
        ga_near_oracle += mask in ranking[:16]
    assert oracle_found >= 16
    assert ga_found >= 16
    assert ga_near_oracle >= 16


def test_leave_one_subject_out_scores_pooled_predictions(tiny_config):
    config = tiny_config(cv=CvSettings(kind="loso"), cache=False)
    dataset = generate(config.dataset.synthetic)
    plan = make_cv_plan(dataset.subjects(), kind="loso")
    evaluator = CandidateEvaluator(config, dataset, plan)

    objective, folds, pooled = evaluator.evaluate(Candidate(Configuration({}), seed=3, phase="search"))
    assert len(folds) == 8
    # Every single-subject fold has one class, so its AUC is undefined
    assert all(math.isnan(f.metrics.auc) for f in folds)
    assert pooled is not None
    assert pooled.n_pos + pooled.n_neg == len(dataset)
    # An undefined pooled F1 scores as 0
    expected: float = 0.0 if math.isnan(pooled.f1) else pooled.f1
    assert objective == pytest.approx(-expected)


def test_pooled_f1_separates_a_constant_classifier():
    labels = [1] * 16 + [0] * 16
    always_positive = score_report([0.9] * 32, labels)
    perfect = score_report([0.9] * 16 + [0.1] * 16, labels)
    assert always_positive.f1 == pytest.approx(2 / 3)
    assert perfect.f1 == 1.0


def test_leave_one_subject_out_run_reports_one_result_per_repeat(tiny_config):
    config = tiny_config(cv=CvSettings(kind="loso"))
    summary = run_tune(config)
    trials = read_trials(config.output_dir)
    assert all(t.pooled is not None for t in trials if t.error is None)
    assert summary.repeats["f1"]["n"] + summary.repeats["f1"]["excluded"] == 2

    warm = run_tune(config)
    assert all(t.cache_hit for t in read_trials(config.output_dir))
    assert warm.best_value == summary.best_value


def test_runs_record_their_environment(tmp_path):
    config = ExperimentConfig(benchmark=BenchmarkSettings(), optimizer="pso", cache=False, master_seed=5,
                              output_dir=tmp_path, pso=PsoConfig(swarm_size=2, iterations=1))
    run_tune(config)
    environment = json.loads((tmp_path / PROVENANCE_FILE).read_text())
    assert environment["master_seed"] == 5
    assert environment["packages"]["numpy"] == np.__version__
    assert f"numpy {np.__version__}" in (tmp_path / RUN_LOG).read_text()
    assert "numpy" not in (tmp_path / SUMMARY_FILE).read_text()


def test_cached_folds_are_served_much_faster(tiny_config, tmp_path):
    config = tiny_config(
        dataset=DataSource(synthetic=SynthSpec(n_subjects=20, windows_per_subject=20, n_features=10, seed=2)),
        trainer=TrainerConfig(epochs=60),
    )
    dataset = generate(config.dataset.synthetic)
    plan = make_cv_plan(dataset.subjects(), k=2)
    evaluator = CandidateEvaluator(config, dataset, plan, CheckpointCache(tmp_path / "cache"))
    candidate = Candidate(Configuration({}), seed=4, phase="search")

    start = time.perf_counter()
    cold, _, _ = evaluator.evaluate(candidate)
    cold_time = time.perf_counter() - start
    start = time.perf_counter()
    warm, folds, _ = evaluator.evaluate(candidate)
    warm_time = time.perf_counter() - start

    assert warm == cold
    assert all(f.cache_hit for f in folds)
    assert cold_time >= 10 * warm_time


@pytest.mark.slow
def test_warm_run_is_ten_times_faster(tiny_config):
    config = tiny_config(
        dataset=DataSource(synthetic=SynthSpec(n_subjects=40, windows_per_subject=20, n_features=30, seed=3)),
        pso=PsoConfig(swarm_size=4, iterations=3),
        trainer=TrainerConfig(epochs=100),
        cv=CvSettings(k=5),
    )
    start = time.perf_counter()
    run_tune(config)
    cold_time = time.perf_counter() - start
    start = time.perf_counter()
    run_tune(config)
    warm_time = time.perf_counter() - start
    assert all(t.cache_hit for t in read_trials(config.output_dir))
    assert cold_time >= 10 * warm_time
