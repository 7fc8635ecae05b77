"""
Experiment runner.

A run goes through stages: data (load or generate, plan the folds), search (the chosen
optimizer, every objective evaluation logged as one trial), repeats (the winner retrained
with `repeats` derived seeds), report and plot. Each candidate's objective is the
unweighted mean of its per-fold objectives.

Outputs are a pure function of (config, data, master_seed): trial seeds are derived from
the master seed and the trial id (or candidate id under successive halving), and batches
are gathered in input order before anything is logged.
"""

import hashlib
import importlib.metadata
import json
import logging
import math
import platform
import statistics
import time
from dataclasses import dataclass
from logging import Logger
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import tqdm

from metatune.benchmarks import BenchmarkObjective, benchmark
from metatune.cache import CacheEntry, CacheKey, CheckpointCache
from metatune.config import ExperimentConfig
from metatune.cv import CvKind, CvPlan, Fold, make_cv_plan
from metatune.dataset import CsvSchema, Dataset, load_csv, smote
from metatune.errors import OptimizationFailedError
from metatune.executor import Outcome, parallel_map
from metatune.ga import FeatureMask, GeneticAlgorithm, feature_selection_space
from metatune.hybrid import HybridConfig, HybridResult, hybrid_run
from metatune.metrics import METRIC_NAMES, Aggregate, MetricsReport, aggregate, score_report
from metatune.multifidelity import (BudgetedResult, HalvingResult, HyperbandResult, hyperband_run, sh_run,
                                    sh_schedule)
from metatune.optimizer import AskTellOptimizer
from metatune.plots import plot_convergence
from metatune.pso import ParticleSwarm
from metatune.report import SUMMARY_FILE, RunSummary, json_float, markdown_table, summary_row
from metatune.search_space import Configuration, Genotype, SearchSpace, decode, sample
from metatune.seeds import derive_seed
from metatune.stage import Stage, run_stage
from metatune.synthetic import generate
from metatune.trainer import TrainerConfig, TrainResult, data_fingerprint, train_and_score
from metatune.trial_log import FoldResult, TrialLog, TrialRecord

log: Logger = logging.getLogger(__name__)

BEST_CONFIG_FILE: str = "best_config.json"
REPORT_FILE: str = "report.md"
PLOT_FILE: str = "convergence.png"
CONFIG_FILE: str = "config.json"
PROVENANCE_FILE: str = "provenance.json"
PROVENANCE_PACKAGES: tuple[str, ...] = ("metatune", "numpy", "scipy", "scikit-learn", "pydantic", "matplotlib", "tqdm")


@dataclass
class Candidate:
    configuration: Configuration
    seed: int
    phase: str
    genotype: Optional[Genotype] = None
    epochs: Optional[int] = None
    mask: Optional[FeatureMask] = None
    repeat: Optional[int] = None


@dataclass
class RecordedResult(BudgetedResult):
    record: Optional[TrialRecord] = None


class CandidateEvaluator:
    """Scores one configuration: mean objective over the CV folds (pooled under
    leave-one-subject-out), or a benchmark value"""

    def __init__(
            self,
            config: ExperimentConfig,
            dataset: Optional[Dataset] = None,
            plan: Optional[CvPlan] = None,
            cache: Optional[CheckpointCache] = None,
            bench: Optional[BenchmarkObjective] = None
    ):
        self.logger: Logger = logging.getLogger("CandidateEvaluator")
        self.config: ExperimentConfig = config
        self.cache: Optional[CheckpointCache] = cache
        self.bench: Optional[BenchmarkObjective] = bench
        self.splits: list[tuple[Fold, Dataset, Dataset]] = []
        # Leave-one-subject-out folds hold one class: metrics come from the pooled predictions
        self.pooled: bool = plan is not None and plan.kind == CvKind.LOSO
        if dataset is not None and plan is not None:
            self.splits = [self._split(dataset, fold) for fold in plan]

    def _split(self, dataset: Dataset, fold: Fold) -> tuple[Fold, Dataset, Dataset]:
        train: Dataset = dataset.subset(fold.train_subjects)
        val: Dataset = dataset.subset(fold.test_subjects)
        settings = self.config.smote
        if settings.enabled:
            # Oversampling runs on the training side of each fold only
            train = smote(train, settings.k, settings.target_ratio, derive_seed(self.config.master_seed, "smote", fold.index))
        return fold, train, val

    def evaluate(self, candidate: Candidate) -> tuple[float, list[FoldResult], Optional[MetricsReport]]:
        """Objective, per-fold results and, for leave-one-subject-out plans, the pooled report"""
        if self.bench is not None:
            x: list[float] = [float(candidate.configuration[name]) for name in self.bench.space().names]
            return benchmark(self.bench.kind, x), [], None

        overrides: dict = {"seed": candidate.seed}
        if candidate.epochs is not None:
            overrides["epochs"] = candidate.epochs
        cfg: TrainerConfig = TrainerConfig.from_configuration(candidate.configuration, base=self.config.trainer, **overrides)
        outputs: list[tuple[FoldResult, np.ndarray, float]] = [
            self._fold(cfg, fold, train, val, candidate.mask) for fold, train, val in self.splits
        ]
        folds: list[FoldResult] = [f for f, _, _ in outputs]
        if not self.pooled:
            return float(np.mean([f.objective for f in folds])), folds, None

        scores: np.ndarray = np.concatenate([s for _, s, _ in outputs])
        labels: np.ndarray = np.concatenate([val.labels for _, _, val in self.splits])
        report: MetricsReport = score_report(scores, labels, cfg.threshold)
        spec = self.config.objective
        primary: float = report.get(spec.primary_metric)
        if math.isnan(primary):
            self.logger.warning(f"Pooled {spec.primary_metric} is undefined, scored as 0")
            primary = 0.0
        return -primary + float(np.mean([p for _, _, p in outputs])), folds, report

    def _fold(
            self,
            cfg: TrainerConfig,
            fold: Fold,
            train: Dataset,
            val: Dataset,
            mask: Optional[FeatureMask]
    ) -> tuple[FoldResult, np.ndarray, float]:
        clip: Optional[float] = self.config.normalization_clip
        key: Optional[CacheKey] = None
        resume = None
        if self.cache is not None:
            text: str = f"{cfg.fingerprint()}:{data_fingerprint(train, val, mask, clip)}"
            key = CacheKey(hashlib.sha256(text.encode("utf-8")).hexdigest()[:32], fold.index, cfg.seed, cfg.epochs)
            entry: Optional[CacheEntry] = self.cache.get(key)
            if entry is not None and (entry.scores is not None or not self.pooled):
                scores: np.ndarray = entry.scores if entry.scores is not None else np.zeros(0)
                return FoldResult(fold.index, entry.objective, entry.metrics, cache_hit=True), scores, entry.penalty
            previous: Optional[CacheEntry] = self.cache.latest(key.config_hash, fold.index, cfg.seed, cfg.epochs)
            resume = previous.checkpoint if previous is not None else None

        result: TrainResult = train_and_score(cfg, train, val, mask, self.config.objective, resume, clip)
        if self.cache is not None and key is not None:
            self.cache.put(key, CacheEntry(result.checkpoint, result.objective, result.metrics, result.scores, result.penalty))
        fold_result: FoldResult = FoldResult(fold.index, result.objective, result.metrics, trained_epochs=result.trained_epochs)
        return fold_result, result.scores, result.penalty


class Experiment:
    """State shared by the stages of one run"""

    def __init__(self, config: ExperimentConfig, trial_log: TrialLog):
        self.logger: Logger = logging.getLogger("Experiment")
        self.config: ExperimentConfig = config
        self.trial_log: TrialLog = trial_log
        self.cache: Optional[CheckpointCache] = CheckpointCache(config.resolved_cache_dir()) if config.cache else None

        self.dataset: Optional[Dataset] = None
        self.plan: Optional[CvPlan] = None
        self.bench: Optional[BenchmarkObjective] = None
        self.space: Optional[SearchSpace] = None
        self.evaluator: Optional[CandidateEvaluator] = None

        self.best: Optional[tuple[Configuration, float]] = None
        self.best_mask: Optional[FeatureMask] = None
        self.best_epochs: Optional[int] = None
        self.history: list[float] = []
        self.repeat_reports: list[MetricsReport] = []
        self.aggregate: Optional[Aggregate] = None
        self.summary: Optional[RunSummary] = None

    # ----------------------------------------------------
    #                TRIAL SUBMISSION
    # ----------------------------------------------------

    def _score(self, candidate: Candidate) -> TrialRecord:
        assert self.evaluator is not None
        start: float = time.perf_counter()
        objective, folds, pooled = self.evaluator.evaluate(candidate)
        return TrialRecord(
            trial_id=-1,
            phase=candidate.phase,
            configuration=candidate.configuration.as_dict(),
            seed=candidate.seed,
            budget=candidate.epochs,
            genotype=None if candidate.genotype is None else [float(v) for v in candidate.genotype],
            objective=objective,
            folds=folds,
            cache_hit=bool(folds) and all(f.cache_hit for f in folds),
            duration=time.perf_counter() - start,
            repeat=candidate.repeat,
            pooled=pooled,
        )

    def _failure(self, candidate: Candidate, error: Exception) -> TrialRecord:
        return TrialRecord(
            trial_id=-1,
            phase=candidate.phase,
            configuration=candidate.configuration.as_dict(),
            seed=candidate.seed,
            budget=candidate.epochs,
            genotype=None if candidate.genotype is None else [float(v) for v in candidate.genotype],
            repeat=candidate.repeat,
            error=f"{type(error).__name__}: {error}",
        )

    def _commit(self, record: TrialRecord):
        record.trial_id = self.trial_log.count
        if record.error is not None:
            self.logger.warning(f"Trial {record.trial_id} failed: {record.error}")
            self.trial_log.log(f"Trial {record.trial_id} failed: {record.error}")
        self.trial_log.record(record)

    def submit(self, candidates: list[Candidate]) -> list[TrialRecord]:
        """Evaluates a batch in parallel and logs one record per candidate, in input order"""
        outcomes: list[Outcome[TrialRecord]] = parallel_map(self._score, candidates, self.config.workers)
        records: list[TrialRecord] = []
        for candidate, outcome in zip(candidates, outcomes):
            record: TrialRecord = outcome.result if outcome.ok else self._failure(candidate, outcome.error)  # type: ignore
            self._commit(record)
            records.append(record)
        return records

    def _trial_seed(self, offset: int) -> int:
        return derive_seed(self.config.master_seed, "trial", self.trial_log.count + offset)

    def evaluate_configurations(
            self,
            configurations: list[Configuration],
            genotypes: Optional[list[Genotype]] = None,
            masks: Optional[list[FeatureMask]] = None,
            phase: str = "search"
    ) -> list[float]:
        candidates: list[Candidate] = [
            Candidate(
                configuration=c,
                seed=self._trial_seed(i),
                phase=phase,
                genotype=None if genotypes is None else genotypes[i],
                mask=None if masks is None else masks[i],
            )
            for i, c in enumerate(configurations)
        ]
        return [r.objective for r in self.submit(candidates)]

    def budgeted_objective(self, configuration: Configuration, budget: int, seed: int) -> RecordedResult:
        """Objective for successive halving; never raises, failures score +inf"""
        candidate: Candidate = Candidate(configuration=configuration, seed=seed, phase="rung", epochs=budget)
        try:
            record: TrialRecord = self._score(candidate)
        except Exception as e:
            record = self._failure(candidate, e)
        trained: int = sum(f.trained_epochs for f in record.folds)
        return RecordedResult(value=record.objective, epochs=budget, trained_epochs=trained, record=record)

    def map_batch(self, fn: Callable, items: list) -> list:
        """Order-preserving parallel map that logs the records carried by the results"""
        results: list = []
        for outcome in parallel_map(fn, items, self.config.workers):
            if not outcome.ok:
                raise outcome.error  # type: ignore[misc]
            if isinstance(outcome.result, RecordedResult) and outcome.result.record is not None:
                self._commit(outcome.result.record)
            results.append(outcome.result)
        return results

    # ----------------------------------------------------
    #                OPTIMIZERS
    # ----------------------------------------------------

    def search(self):
        name: str = self.config.optimizer
        if name in ("pso", "ga"):
            self._run_population(name)
        elif name == "hybrid":
            self._run_hybrid()
        elif name == "sh":
            self._run_halving()
        elif name == "hyperband":
            self._run_hyperband()
        elif name == "feature_select":
            self._run_feature_selection()
        else:
            self._run_baseline()
        assert self.best is not None
        if math.isinf(self.best[1]):
            raise OptimizationFailedError("Every evaluation of the search failed")
        self.trial_log.log(f"Best {self.best[1]:.6g} with {self.best[0].as_dict()}")

    def _run_population(self, name: str):
        assert self.space is not None
        seed: int = derive_seed(self.config.master_seed, name)
        optimizer: AskTellOptimizer
        if name == "pso":
            optimizer = ParticleSwarm(self.space, self.config.pso, seed=seed)
            rounds: int = self.config.pso.iterations
        else:
            optimizer = GeneticAlgorithm(self.space, self.config.ga, seed=seed)
            rounds = self.config.ga.generations
        space: SearchSpace = self.space
        self.best = optimizer.run(
            lambda batch: self.evaluate_configurations([decode(space, g) for g in batch], genotypes=batch),
            rounds,
            desc=name.upper(),
        )
        self.history = list(optimizer.history)

    def _run_hybrid(self):
        assert self.space is not None
        cfg: HybridConfig = HybridConfig(
            ga=self.config.ga,
            pso=self.config.pso,
            budget_split=self.config.hybrid.budget_split,
            budget=self.config.hybrid.budget,
        )
        result: HybridResult = hybrid_run(self.space, self.evaluate_configurations, cfg, self.config.master_seed)
        self.trial_log.log(f"Hybrid evaluations {result.evaluations_used}, stage 1 best {result.stage1_best[1]:.6g}")
        self.best = result.final_best
        self.history = result.history

    def _sampler(self, n: int, rng: np.random.Generator) -> list[Configuration]:
        assert self.space is not None
        return [decode(self.space, sample(self.space, rng)) for _ in range(n)]

    def _run_halving(self):
        settings = self.config.halving
        rng: np.random.Generator = np.random.default_rng(derive_seed(self.config.master_seed, "sh"))
        schedule = sh_schedule(settings.n_candidates, settings.eta, settings.min_budget, settings.max_budget)
        result: HalvingResult = sh_run(
            self._sampler(settings.n_candidates, rng), self.budgeted_objective, schedule,
            seed=self.config.master_seed, map_batch=self.map_batch,
        )
        self.trial_log.log(
            f"Successive halving: nominal cost {result.nominal_cost} epochs, trained {result.trained_epochs} epochs"
        )
        self.best = (result.winner, result.value)
        self.best_epochs = result.budget
        self.history = [min(v for _, v in rung.evaluated) for rung in result.trace]

    def _run_hyperband(self):
        settings = self.config.halving
        result: HyperbandResult = hyperband_run(
            self._sampler, self.budgeted_objective, settings.eta, settings.max_budget,
            seed=self.config.master_seed, map_batch=self.map_batch,
        )
        for bracket in result.brackets:
            self.trial_log.log(f"Bracket s={bracket.s}: n={bracket.n}, min budget {bracket.min_budget}, value {bracket.value:.6g}")
        self.best = (result.winner, result.value)
        self.best_epochs = settings.max_budget
        self.history = [b.value for b in result.brackets]

    def _run_feature_selection(self):
        assert self.dataset is not None
        space: SearchSpace = feature_selection_space(self.dataset.n_features, self.dataset.feature_names)
        ga: GeneticAlgorithm = GeneticAlgorithm(space, self.config.ga, seed=derive_seed(self.config.master_seed, "feature_select"))

        def evaluate(batch: list[Genotype]) -> list[float]:
            configurations: list[Configuration] = [decode(space, g) for g in batch]
            masks: list[FeatureMask] = [FeatureMask.from_configuration(c, space) for c in configurations]
            return self.evaluate_configurations(configurations, genotypes=batch, masks=masks)

        self.best = ga.run(evaluate, self.config.ga.generations, desc="Feature selection")
        self.best_mask = FeatureMask.from_configuration(self.best[0], space)
        self.trial_log.log(f"Selected features {self.best_mask.indices} ({self.best_mask})")
        self.history = list(ga.history)

    def _run_baseline(self):
        value: float = self.evaluate_configurations([Configuration({})], phase="baseline")[0]
        self.best = (Configuration({}), value)
        self.history = [value]

    # ----------------------------------------------------
    #                REPEATS AND OUTPUTS
    # ----------------------------------------------------

    def repeat_best(self):
        """Retrains the winner `repeats` times with derived seeds and aggregates fold x seed metrics"""
        if self.bench is not None:
            return
        assert self.best is not None
        candidates: list[Candidate] = [
            Candidate(
                configuration=self.best[0],
                seed=derive_seed(self.config.master_seed, "repeat", r),
                phase="repeat",
                epochs=self.best_epochs,
                mask=self.best_mask,
                repeat=r,
            )
            for r in range(self.config.repeats)
        ]
        records: list[TrialRecord] = []
        for candidate in tqdm.tqdm(candidates, desc="Repeats", unit="seed", disable=None, leave=False):
            records.extend(self.submit([candidate]))
        self.repeat_reports = [
            report for r in records
            for report in ([r.pooled] if r.pooled is not None else [f.metrics for f in r.folds if f.metrics is not None])
        ]
        if not self.repeat_reports:
            raise OptimizationFailedError("Every repeat of the best configuration failed")
        self.aggregate = aggregate(self.repeat_reports)

    def write_outputs(self):
        assert self.best is not None
        out: Path = self.config.output_dir
        best_configuration: dict = self.best[0].as_dict()
        if self.best_mask is not None:
            best_configuration = {"mask": str(self.best_mask), "features": self.best_mask.indices}

        repeats: dict[str, dict[str, float]] = {}
        if self.aggregate is not None:
            repeats = {
                name: {"mean": m.mean, "sd": m.sd, "n": m.n, "excluded": m.excluded}
                for name, m in self.aggregate.metrics.items()
            }
        self.summary = RunSummary(
            name=self.config.name,
            optimizer=self.config.optimizer,
            master_seed=self.config.master_seed,
            best_configuration=best_configuration,
            best_value=self.best[1],
            n_trials=self.trial_log.count,
            history=self.history,
            plan_fingerprint=self.plan.fingerprint() if self.plan is not None else None,
            repeats=repeats,
        )
        self.summary.write(out / SUMMARY_FILE)
        with open(out / BEST_CONFIG_FILE, "w", encoding="utf-8") as f:
            json.dump(best_configuration, f, indent=2, sort_keys=True, default=str)
            f.write("\n")

        lines: list[str] = [f"# {self.config.name}", "", f"Optimizer: `{self.config.optimizer}`, "
                            f"master seed {self.config.master_seed}, {self.trial_log.count} trials.", "",
                            f"Best objective: {self.best[1]:.6g}", ""]
        if self.aggregate is not None:
            lines += [
                f"Repeated {self.config.repeats} times over {len(self.plan or [])} folds (mean ± SD):", "",
                markdown_table([summary_row(self.config.optimizer, self.aggregate)]), "",
            ]
        (out / REPORT_FILE).write_text("\n".join(lines), encoding="utf-8")
        if self.cache is not None:
            self.trial_log.log(f"Cache: {self.cache.hits} hits, {self.cache.misses} misses")


class DataStage(Stage):
    def __init__(self, experiment: Experiment):
        super().__init__("Data", experiment.trial_log)
        self.experiment = experiment

    def run(self):
        exp: Experiment = self.experiment
        config: ExperimentConfig = exp.config
        if config.benchmark is not None:
            settings = config.benchmark
            exp.bench = BenchmarkObjective(settings.kind, settings.dims, settings.lower, settings.upper)
            exp.space = exp.bench.space()
            exp.evaluator = CandidateEvaluator(config, bench=exp.bench)
            self.trial_log.log(f"Benchmark {settings.kind.value} in {settings.dims} dimensions")
            return

        source = config.dataset
        assert source is not None
        if source.path is not None:
            schema: CsvSchema = source.csv_schema
            exp.dataset = load_csv(source.path, schema)
        else:
            assert source.synthetic is not None
            exp.dataset = generate(source.synthetic)
        exp.plan = make_cv_plan(
            exp.dataset.subjects(), config.cv.k, config.cv.kind, config.cv.stratified,
            seed=config.cv.seed if config.cv.seed is not None else config.master_seed,
        )
        exp.space = config.search_space()
        exp.evaluator = CandidateEvaluator(config, exp.dataset, exp.plan, exp.cache)
        with open(config.output_dir / "plan.json", "w", encoding="utf-8") as f:
            json.dump(exp.plan.to_dict(), f, indent=2)
        self.trial_log.log(
            f"{len(exp.dataset)} rows, {exp.dataset.n_features} features, "
            f"{len(exp.plan.subjects)} subjects, {len(exp.plan)} folds ({exp.plan.kind.value})"
        )


class SearchStage(Stage):
    def __init__(self, experiment: Experiment):
        super().__init__("Search", experiment.trial_log)
        self.experiment = experiment

    def run(self):
        self.experiment.search()


class RepeatStage(Stage):
    def __init__(self, experiment: Experiment):
        super().__init__("Repeats", experiment.trial_log)
        self.experiment = experiment

    def run(self):
        self.experiment.repeat_best()


class ReportStage(Stage):
    def __init__(self, experiment: Experiment):
        super().__init__("Report", experiment.trial_log)
        self.experiment = experiment

    def run(self):
        self.experiment.write_outputs()


class PlotStage(Stage):
    def __init__(self, experiment: Experiment):
        super().__init__("Plot", experiment.trial_log)
        self.experiment = experiment

    def run(self):
        exp: Experiment = self.experiment
        plot_convergence({exp.config.optimizer: exp.history}, exp.config.output_dir / PLOT_FILE, title=exp.config.name)


def provenance(config: ExperimentConfig) -> dict:
    """Seed and software versions of a run, written next to (not into) summary.json"""
    packages: dict[str, Optional[str]] = {}
    for name in PROVENANCE_PACKAGES:
        try:
            packages[name] = importlib.metadata.version(name)
        except importlib.metadata.PackageNotFoundError:
            packages[name] = None
    return {
        "master_seed": config.master_seed,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "packages": packages,
    }


def run_tune(config: ExperimentConfig) -> RunSummary:
    """Runs one experiment and writes its outputs to config.output_dir

    The trial log is flushed even when a stage fails; the error is then re-raised.
    """
    out: Path = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    config.dump(out / CONFIG_FILE)
    log.info(f"Running '{config.name}' ({config.optimizer}) into {out}")

    environment: dict = provenance(config)
    with open(out / PROVENANCE_FILE, "w", encoding="utf-8") as f:
        json.dump(environment, f, indent=2, sort_keys=True)
        f.write("\n")

    with TrialLog(out) as trial_log:
        trial_log.log(f"Python {environment['python']}, " + ", ".join(f"{k} {v}" for k, v in environment["packages"].items()))
        experiment: Experiment = Experiment(config, trial_log)
        pipeline: list[tuple[Stage, str]] = [
            (DataStage(experiment), "stop"),
            (SearchStage(experiment), "stop"),
            (RepeatStage(experiment), "stop"),
            (ReportStage(experiment), "stop"),
            (PlotStage(experiment), "continue"),
        ]
        for stage, on_error in pipeline:
            run_stage(stage, on_error)

    assert experiment.summary is not None
    log.info(f"Done: best {experiment.summary.best_value:.6g} after {experiment.summary.n_trials} trials")
    return experiment.summary


TREND_OPTIMIZERS: tuple[str, ...] = ("baseline", "pso", "ga", "hybrid")


@dataclass
class TrendResult:
    optimizers: tuple[str, ...]
    seeds: list[int]
    medians: dict[str, dict[str, float]]
    """Optimizer -> metric -> median over seeds of the repeat means"""

    per_seed_f1: dict[str, list[float]]
    ordering_holds: bool

    def to_dict(self) -> dict:
        return {
            "optimizers": list(self.optimizers),
            "seeds": self.seeds,
            "medians": {o: {k: json_float(v) for k, v in m.items()} for o, m in self.medians.items()},
            "per_seed_f1": {o: [json_float(v) for v in values] for o, values in self.per_seed_f1.items()},
            "ordering_holds": self.ordering_holds,
        }


def run_trend(config: ExperimentConfig, seeds: Sequence[int], optimizers: Sequence[str] = TREND_OPTIMIZERS) -> TrendResult:
    """Runs every optimizer over several master seeds on the same data and compares medians

    The ordering checked is hybrid >= max(pso, ga) >= baseline on median F1.
    """
    if config.dataset is None:
        raise ValueError("Trend comparison needs a dataset")
    medians: dict[str, dict[str, float]] = {}
    per_seed_f1: dict[str, list[float]] = {}
    for name in optimizers:
        means: dict[str, list[float]] = {metric: [] for metric in METRIC_NAMES}
        for seed in seeds:
            run_config: ExperimentConfig = config.model_copy(update={
                "optimizer": name,
                "master_seed": seed,
                "output_dir": config.output_dir / f"{name}-seed{seed}",
            })
            summary: RunSummary = run_tune(run_config)
            for metric in METRIC_NAMES:
                means[metric].append(summary.repeats.get(metric, {}).get("mean", math.nan))
        medians[name] = {
            metric: statistics.median(v for v in values if not math.isnan(v)) if any(not math.isnan(v) for v in values)
            else math.nan
            for metric, values in means.items()
        }
        per_seed_f1[name] = means["f1"]

    holds: bool = False
    if all(o in medians for o in TREND_OPTIMIZERS):
        f1: dict[str, float] = {o: medians[o]["f1"] for o in TREND_OPTIMIZERS}
        holds = f1["hybrid"] >= max(f1["pso"], f1["ga"]) >= f1["baseline"]

    result: TrendResult = TrendResult(tuple(optimizers), list(seeds), medians, per_seed_f1, holds)
    out: Path = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trend.json", "w", encoding="utf-8") as f:
        json.dump(result.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    rows: list[list[str]] = [
        [name] + [f"{medians[name][m]:.3f}" if not math.isnan(medians[name][m]) else "n/a" for m in
                  ("accuracy", "precision", "recall", "f1", "auc", "kappa")]
        for name in optimizers
    ]
    table: str = markdown_table(rows, header=["Model", "Accuracy", "Precision", "Recall", "F1", "AUC", "Kappa"])
    (out / "trend.md").write_text(
        f"# Optimizer comparison (median over {len(seeds)} seeds)\n\n{table}\n\n"
        f"Ordering hybrid >= max(pso, ga) >= baseline: {'holds' if holds else 'does not hold'}\n",
        encoding="utf-8",
    )
    log.info(f"Trend ordering {'holds' if holds else 'does not hold'}")
    return result
