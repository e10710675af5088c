"""Training pipeline, evaluation, and the ablation harness.

Protocol is transductive: the similarity graph spans train and test patients
(nodes ordered train-first), the cross-entropy is masked to training nodes,
and the consistency regularizer runs over every edge. Training is full batch,
one optimizer step per epoch, deterministic per seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields, replace
from typing import Callable

import numpy as np

from .autodiff import Tape, backward
from .data import (
    Cohort,
    SplitIndices,
    Standardizer,
    fit_standardizer,
    impute,
    stratified_split,
    training_medians,
)
from .graph import PatientGraph, build_adaptive_knn_graph, modulate_edges
from .metrics import EvalReport, evaluation_report, explainability_counts
from .model import (
    ForwardPass,
    LossBreakdown,
    ModelParams,
    forward,
    init_params,
    total_loss,
)
from .optim import AdamState, adam_step


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; defaults follow the reference training recipe."""

    hidden_dim: int = 32
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    epochs: int = 150
    consistency_weight: float = 0.1
    k_min: int = 3
    k_max: int = 10
    mini_graph_k: int = 10
    seed: int = 0
    variant: str = "apcgnn"
    confidence_edge_modulation: bool = False
    test_fraction: float = 0.2
    gcn_mean_aggregation: bool = False
    consistency_on: str = "h"
    confidence_clamp: float | None = None

    def validate(self) -> None:
        if self.hidden_dim < 1 or self.epochs < 1:
            raise ValueError("hidden_dim and epochs must be positive")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")
        if self.consistency_weight < 0:
            raise ValueError("consistency_weight must be >= 0")
        if self.k_min < 1 or self.k_max < self.k_min or self.mini_graph_k < 1:
            raise ValueError("need 1 <= k_min <= k_max and mini_graph_k >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.variant not in ("apcgnn", "vanilla_gcn", "mlp"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.consistency_on not in ("h", "h_final"):
            raise ValueError("consistency_on must be 'h' or 'h_final'")
        if self.confidence_clamp is not None and not 0.0 <= self.confidence_clamp <= 1.0:
            raise ValueError("confidence_clamp must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**payload)
        cfg.validate()
        return cfg


def weights_hash(params: ModelParams) -> str:
    """Content hash of all weights; doubles as the model version id."""
    digest = hashlib.sha256()
    for name, arr in params.as_dict().items():
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(arr).tobytes())
    return digest.hexdigest()


@dataclass
class TrainedModel:
    """Weights plus everything mini-graph inference needs at deployment."""

    params: ModelParams
    standardizer: Standardizer
    medians: np.ndarray
    train_features: np.ndarray  # standardized training rows
    train_labels: np.ndarray
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    config: TrainConfig
    loss_curve: list[LossBreakdown] = field(default_factory=list)

    def weights_hash(self) -> str:
        return weights_hash(self.params)

    @property
    def n_train(self) -> int:
        return self.train_features.shape[0]


ProgressCallback = Callable[[int, LossBreakdown], None]


def _forward_with_modulation(
    x: np.ndarray,
    graph: PatientGraph | None,
    params: ModelParams,
    config: TrainConfig,
    tape: Tape | None,
) -> ForwardPass:
    """Forward pass honoring the optional confidence-modulated edge weights.

    When enabled, a plain pass produces confidences, the graph weights are
    rescaled by (1 - c), and the recorded pass runs on the modulated graph;
    the first-pass confidence is a constant, not a differentiated quantity.
    """
    graph_eff = graph
    if (
        config.confidence_edge_modulation
        and config.variant == "apcgnn"
        and graph is not None
    ):
        plain = forward(
            x, graph, params, config.variant,
            confidence_clamp=config.confidence_clamp,
        )
        conf = plain.confidence_values()
        if conf is not None:
            graph_eff = modulate_edges(graph, conf)
    return forward(
        x,
        graph_eff,
        params,
        config.variant,
        confidence_clamp=config.confidence_clamp,
        gcn_mean_aggregation=config.gcn_mean_aggregation,
        tape=tape,
    )


def fit_transductive(
    x_std: np.ndarray,
    labels: np.ndarray,
    train_mask: np.ndarray,
    graph: PatientGraph,
    config: TrainConfig,
    progress_cb: ProgressCallback | None = None,
    n_classes: int = 3,
) -> tuple[ModelParams, list[LossBreakdown]]:
    """Full-batch Adam training of the masked objective on a fixed graph."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=config.seed, spawn_key=(1,)))
    params = init_params(rng, x_std.shape[1], config.hidden_dim, n_classes)
    state = AdamState()
    arrays = params.as_dict()
    curve: list[LossBreakdown] = []
    for epoch in range(config.epochs):
        tape = Tape()
        fp = _forward_with_modulation(
            x_std, graph, ModelParams.from_dict(arrays), config, tape
        )
        loss, breakdown = total_loss(
            fp, labels, train_mask, config.consistency_weight, config.consistency_on
        )
        if not np.isfinite(breakdown.total):
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}: {breakdown.to_dict()}"
            )
        backward(loss)
        arrays = adam_step(
            state, arrays, fp.gradients(), config.learning_rate, config.weight_decay
        )
        curve.append(breakdown)
        if progress_cb is not None:
            progress_cb(epoch, breakdown)
    return ModelParams.from_dict(arrays), curve


def train(
    cohort: Cohort,
    config: TrainConfig | None = None,
    progress_cb: ProgressCallback | None = None,
) -> tuple[TrainedModel, SplitIndices]:
    """Split, preprocess, build the graph, and train; deterministic per seed."""
    config = config or TrainConfig()
    config.validate()
    cohort.check_trainable()
    split = stratified_split(cohort.labels, config.test_fraction, config.seed)
    order = np.concatenate([split.train, split.test])
    raw = cohort.features[order]
    labels = cohort.labels[order]
    n_train = split.train.size
    train_idx = np.arange(n_train)

    medians = training_medians(raw, train_idx)
    filled = impute(raw, train_idx)
    standardizer = fit_standardizer(filled, train_idx)
    x_std = standardizer.transform(filled)
    graph = build_adaptive_knn_graph(x_std, config.k_min, config.k_max)
    mask = np.zeros(raw.shape[0], dtype=bool)
    mask[:n_train] = True

    params, curve = fit_transductive(
        x_std, labels, mask, graph, config, progress_cb,
        n_classes=len(cohort.class_names),
    )
    model = TrainedModel(
        params=params,
        standardizer=standardizer,
        medians=medians,
        train_features=x_std[:n_train].copy(),
        train_labels=labels[:n_train].copy(),
        feature_names=tuple(cohort.feature_names),
        class_names=tuple(cohort.class_names),
        config=config,
        loss_curve=curve,
    )
    return model, split


def _impute_with_medians(features: np.ndarray, medians: np.ndarray) -> np.ndarray:
    filled = np.asarray(features, dtype=np.float64).copy()
    holes = np.isnan(filled)
    filled[holes] = np.broadcast_to(medians, filled.shape)[holes]
    return filled


def evaluate(model: TrainedModel, features: np.ndarray, labels: np.ndarray) -> EvalReport:
    """Transductive evaluation: test rows join the retained training graph."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if features.ndim != 2 or features.shape[1] != model.train_features.shape[1]:
        raise ValueError("test features must match the trained dimensionality")
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must align with test rows")
    if features.shape[0] == 0:
        raise ValueError("no test rows to evaluate")
    x_test = model.standardizer.transform(_impute_with_medians(features, model.medians))
    x_all = np.vstack([model.train_features, x_test])
    graph = build_adaptive_knn_graph(x_all, model.config.k_min, model.config.k_max)
    fp = _forward_with_modulation(x_all, graph, model.params, model.config, tape=None)
    probs = fp.probabilities()[model.n_train:]
    preds = np.argmax(probs, axis=1)  # ties resolve to the lowest class index
    conf = fp.confidence_values()
    conf_test = conf[model.n_train:] if conf is not None else None
    return evaluation_report(labels, preds, probs, model.class_names, conf_test)


def train_and_evaluate(
    cohort: Cohort,
    config: TrainConfig | None = None,
    progress_cb: ProgressCallback | None = None,
) -> tuple[TrainedModel, EvalReport, SplitIndices]:
    model, split = train(cohort, config, progress_cb)
    report = evaluate(model, cohort.features[split.test], cohort.labels[split.test])
    return model, report, split


def explainability_stats(confidence: np.ndarray) -> tuple[int, int, int]:
    """(self_dominant, graph_dependent, intermediate) counts."""
    counts = explainability_counts(confidence)
    return (
        counts["self_dominant"],
        counts["graph_dependent"],
        counts["intermediate"],
    )


# ---------------------------------------------------------------------------
# Ablation harness

ABLATION_NAMES = ("full", "no_blending", "no_consistency", "vanilla_gcn", "mlp")


def ablation_config(base: TrainConfig, name: str) -> TrainConfig:
    if name == "full":
        return replace(base, variant="apcgnn", confidence_clamp=None)
    if name == "no_blending":
        # Pure graph path: the confidence gate is pinned to 1, removing the
        # self-feature shortcut rather than the graph.
        return replace(base, variant="apcgnn", confidence_clamp=1.0)
    if name == "no_consistency":
        return replace(base, variant="apcgnn", confidence_clamp=None, consistency_weight=0.0)
    if name == "vanilla_gcn":
        return replace(base, variant="vanilla_gcn", confidence_clamp=None)
    if name == "mlp":
        return replace(base, variant="mlp", confidence_clamp=None)
    raise ValueError(f"unknown ablation {name!r}")


@dataclass
class AblationReport:
    """Per-configuration accuracy / macro-F1 summaries across seeds."""

    seeds: list[int]
    rows: list[dict]

    def to_dict(self) -> dict:
        return {"seeds": self.seeds, "rows": self.rows}

    @classmethod
    def from_dict(cls, payload: dict) -> "AblationReport":
        return cls(seeds=payload["seeds"], rows=payload["rows"])


def run_ablations(
    cohort: Cohort, base_config: TrainConfig, seeds: list[int]
) -> AblationReport:
    """Train every ablation configuration across seeds; failures are recorded
    per cell, never fatal."""
    if not seeds:
        raise ValueError("need at least one seed")
    rows: list[dict] = []
    for name in ABLATION_NAMES:
        accuracies: dict[str, float] = {}
        macro_f1s: dict[str, float] = {}
        errors: dict[str, str] = {}
        for seed in seeds:
            cfg = replace(ablation_config(base_config, name), seed=seed)
            try:
                _, report, _ = train_and_evaluate(cohort, cfg)
            except Exception as exc:  # recorded, not raised
                errors[str(seed)] = f"{type(exc).__name__}: {exc}"
                continue
            accuracies[str(seed)] = report.accuracy
            macro_f1s[str(seed)] = report.macro_f1
        acc_values = list(accuracies.values())
        f1_values = list(macro_f1s.values())
        rows.append(
            {
                "name": name,
                "accuracy": accuracies,
                "macro_f1": macro_f1s,
                "mean_accuracy": float(np.mean(acc_values)) if acc_values else None,
                "std_accuracy": float(np.std(acc_values)) if acc_values else None,
                "mean_macro_f1": float(np.mean(f1_values)) if f1_values else None,
                "std_macro_f1": float(np.std(f1_values)) if f1_values else None,
                "errors": errors or None,
            }
        )
    return AblationReport(seeds=list(seeds), rows=rows)
