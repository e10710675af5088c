"""Scikit-learn style estimator facade.

``ApcGnnClassifier.fit(X, y)`` trains transductively: rows labeled ``-1``
join the similarity graph but are excluded from the loss (the semi-supervised
convention), and their fitted predictions land in ``transduction_``. Fitted
estimators predict unseen patients inductively through per-row mini-graphs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .data import CLASS_NAMES, fit_standardizer, impute, training_medians
from .explain import PredictionReport, predict_new, predict_proba_rows
from .graph import build_adaptive_knn_graph
from .training import TrainConfig, TrainedModel, _forward_with_modulation, fit_transductive

UNLABELED = -1


def check_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Coerce to a 2-D float64 matrix; NaN marks missing, Inf is rejected."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} features, expected {n_features}")
    if np.isinf(X).any():
        raise ValueError("X must not contain infinities")
    return X


def check_labels(y, n_rows: int) -> np.ndarray:
    """Integer labels aligned with X; -1 marks unlabeled transductive rows."""
    y = np.asarray(y)
    if y.shape != (n_rows,):
        raise ValueError(f"y must have shape ({n_rows},), got {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.asarray(y, dtype=np.float64)
        if np.isnan(rounded).any() or (rounded != np.round(rounded)).any():
            raise ValueError("y must contain integer class labels (or -1)")
        y = rounded.astype(np.int64)
    y = y.astype(np.int64)
    if y.min() < UNLABELED:
        raise ValueError("labels must be class indices >= 0, or -1 for unlabeled")
    return y


class ApcGnnClassifier(BaseEstimator, ClassifierMixin):
    """Adaptive patient-centric graph classifier with confidence-guided blending."""

    def __init__(
        self,
        hidden_dim: int = 32,
        learning_rate: float = 0.01,
        weight_decay: float = 5e-4,
        epochs: int = 150,
        consistency_weight: float = 0.1,
        k_min: int = 3,
        k_max: int = 10,
        mini_graph_k: int = 10,
        variant: str = "apcgnn",
        confidence_edge_modulation: bool = False,
        gcn_mean_aggregation: bool = False,
        consistency_on: str = "h",
        confidence_clamp: float | None = None,
        random_state: int = 0,
    ):
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.epochs = epochs
        self.consistency_weight = consistency_weight
        self.k_min = k_min
        self.k_max = k_max
        self.mini_graph_k = mini_graph_k
        self.variant = variant
        self.confidence_edge_modulation = confidence_edge_modulation
        self.gcn_mean_aggregation = gcn_mean_aggregation
        self.consistency_on = consistency_on
        self.confidence_clamp = confidence_clamp
        self.random_state = random_state

    def _config(self) -> TrainConfig:
        cfg = TrainConfig(
            hidden_dim=self.hidden_dim,
            learning_rate=self.learning_rate,
            weight_decay=self.weight_decay,
            epochs=self.epochs,
            consistency_weight=self.consistency_weight,
            k_min=self.k_min,
            k_max=self.k_max,
            mini_graph_k=self.mini_graph_k,
            seed=self.random_state,
            variant=self.variant,
            confidence_edge_modulation=self.confidence_edge_modulation,
            gcn_mean_aggregation=self.gcn_mean_aggregation,
            consistency_on=self.consistency_on,
            confidence_clamp=self.confidence_clamp,
        )
        cfg.validate()
        return cfg

    def fit(self, X, y, feature_names: tuple[str, ...] | None = None):
        config = self._config()
        X = check_feature_matrix(X)
        y = check_labels(y, X.shape[0])
        labeled = y != UNLABELED
        if not labeled.any():
            raise ValueError("fit requires at least one labeled row")
        classes = np.unique(y[labeled])
        n_classes = int(classes.max()) + 1
        if n_classes < 2:
            raise ValueError("fit requires at least two classes")
        train_idx = np.flatnonzero(labeled)

        medians = training_medians(X, train_idx)
        filled = impute(X, train_idx)
        standardizer = fit_standardizer(filled, train_idx)
        x_std = standardizer.transform(filled)
        graph = build_adaptive_knn_graph(x_std, config.k_min, config.k_max)
        params, curve = fit_transductive(
            x_std, y, labeled, graph, config, n_classes=n_classes
        )

        if feature_names is None:
            feature_names = tuple(f"feature_{j}" for j in range(X.shape[1]))
        class_names = (
            CLASS_NAMES
            if n_classes == len(CLASS_NAMES)
            else tuple(f"class_{c}" for c in range(n_classes))
        )
        self.model_ = TrainedModel(
            params=params,
            standardizer=standardizer,
            medians=medians,
            train_features=x_std[labeled].copy(),
            train_labels=y[labeled].copy(),
            feature_names=tuple(feature_names),
            class_names=class_names,
            config=config,
            loss_curve=curve,
        )
        fp = _forward_with_modulation(x_std, graph, params, config, tape=None)
        probs = fp.probabilities()
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = X.shape[1]
        self.transduction_proba_ = probs
        self.transduction_ = np.argmax(probs, axis=1)
        self.confidence_ = fp.confidence_values()
        self.loss_curve_ = curve
        return self

    def _fitted_model(self) -> TrainedModel:
        model = getattr(self, "model_", None)
        if model is None:
            raise NotFittedError("ApcGnnClassifier is not fitted yet; call fit first")
        return model

    def predict_proba(self, X) -> np.ndarray:
        model = self._fitted_model()
        X = check_feature_matrix(X, n_features=self.n_features_in_)
        return predict_proba_rows(model, X)

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]

    def explain(self, x, timestamp: str | None = None) -> PredictionReport:
        """Full prediction report (neighbors, confidence, mini-graph) for one row."""
        return predict_new(x, self._fitted_model(), timestamp=timestamp)
