"""Patient-level prediction reports for unseen patients.

A new patient gets a local mini-graph over its most similar training rows;
the trained weights run one forward pass on it (no retraining, no weight
mutation) and the report carries the class probabilities, the confidence
gate, a reliance bucket, and per-neighbor attribution scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .graph import MiniGraph, PatientGraph, build_mini_graph
from .model import ForwardPass
from .training import TrainedModel, _forward_with_modulation, _impute_with_medians

BUCKET_SELF = "self_dominant"
BUCKET_GRAPH = "graph_dependent"
BUCKET_MIDDLE = "intermediate"


def bucket(confidence: float) -> str:
    """Reliance bucket; the 0.3 and 0.7 boundaries are intermediate."""
    if not 0.0 <= confidence <= 1.0:
        raise ValueError("confidence must lie in [0, 1]")
    if confidence < 0.3:
        return BUCKET_SELF
    if confidence > 0.7:
        return BUCKET_GRAPH
    return BUCKET_MIDDLE


@dataclass(frozen=True)
class NeighborAttribution:
    train_row: int
    similarity: float
    edge_weight: float
    attention: float
    contribution: float
    label: str

    def to_dict(self) -> dict:
        return {
            "train_row": self.train_row,
            "similarity": self.similarity,
            "edge_weight": self.edge_weight,
            "attention": self.attention,
            "contribution": self.contribution,
            "label": self.label,
        }


@dataclass
class PredictionReport:
    """Wire-format prediction for one patient."""

    predicted_class: str
    probabilities: dict[str, float]
    confidence: float | None
    reliance_bucket: str | None
    neighbors: list[NeighborAttribution]
    mini_graph: dict
    model_id: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "predicted_class": self.predicted_class,
            "probabilities": self.probabilities,
            "confidence": self.confidence,
            "reliance_bucket": self.reliance_bucket,
            "neighbors": [n.to_dict() for n in self.neighbors],
            "mini_graph": self.mini_graph,
            "model_id": self.model_id,
            "timestamp": self.timestamp,
        }


def neighbor_contributions(
    graph: PatientGraph,
    alpha: np.ndarray,
    message_norms: np.ndarray,
    node: int = 0,
) -> dict[int, float]:
    """Attribution share per in-neighbor: attention x edge weight x message norm.

    Negative raw scores (anti-correlated neighbors) floor at 0 so shares stay
    in [0, 1] and sum to 1; an all-zero neighborhood falls back to uniform.
    """
    edges = np.flatnonzero(graph.dst == node)
    raw: dict[int, float] = {}
    for e in edges:
        j = int(graph.src[e])
        raw[j] = max(0.0, float(alpha[e]) * float(graph.weight[e]) * float(message_norms[j]))
    total = sum(raw.values())
    if total > 1e-12:
        return {j: v / total for j, v in raw.items()}
    if raw:
        return {j: 1.0 / len(raw) for j in raw}
    return {}


def _validate_raw_features(x_raw: np.ndarray, model: TrainedModel) -> np.ndarray:
    x = np.asarray(x_raw, dtype=np.float64).ravel()
    d = len(model.feature_names)
    if x.shape != (d,):
        raise ValueError(f"expected {d} features {model.feature_names}, got shape {x.shape}")
    observed = ~np.isnan(x)
    if np.isinf(x[observed]).any():
        raise ValueError("feature values must be finite or missing")
    negative = observed & (x < 0)
    if negative.any():
        bad = [model.feature_names[i] for i in np.flatnonzero(negative)]
        raise ValueError(f"implausible negative values for: {bad}")
    return x


def _mini_graph_forward(
    model: TrainedModel, x_std: np.ndarray
) -> tuple[MiniGraph, ForwardPass, np.ndarray]:
    cfg = model.config
    mini = build_mini_graph(
        x_std, model.train_features, k=cfg.mini_graph_k, k_min=cfg.k_min, k_max=cfg.k_max
    )
    local_x = np.vstack([x_std.reshape(1, -1), model.train_features[mini.train_row_ids]])
    fp = _forward_with_modulation(local_x, mini.graph, model.params, cfg, tape=None)
    return mini, fp, local_x


def predict_new(
    x_raw: np.ndarray, model: TrainedModel, timestamp: str | None = None
) -> PredictionReport:
    """Mini-graph inference for one raw feature vector (NaN = missing).

    Missing values are imputed with the training medians; the trained model
    is read-only throughout.
    """
    x = _validate_raw_features(x_raw, model)
    x_filled = _impute_with_medians(x.reshape(1, -1), model.medians)
    x_std = model.standardizer.transform(x_filled).ravel()
    if not np.isfinite(x_std).all():
        raise ValueError("features are non-finite after standardization")

    mini, fp, local_x = _mini_graph_forward(model, x_std)
    probs = fp.probabilities()[0]
    predicted = int(np.argmax(probs))  # ties resolve to the lowest class index
    conf_values = fp.confidence_values()
    confidence = float(conf_values[0]) if conf_values is not None else None

    alpha = (
        fp.alpha.value.ravel()
        if fp.alpha is not None
        else np.zeros(mini.graph.edge_count)
    )
    message_norms = np.linalg.norm(local_x @ model.params.msg_weight, axis=1)
    shares = neighbor_contributions(mini.graph, alpha, message_norms, node=0)

    edge_lookup = {
        int(s): e
        for e, (s, d) in enumerate(zip(mini.graph.src, mini.graph.dst))
        if d == 0
    }
    neighbors = []
    for local in range(1, mini.neighbor_count + 1):
        edge = edge_lookup.get(local)
        neighbors.append(
            NeighborAttribution(
                train_row=int(mini.train_row_ids[local - 1]),
                similarity=float(mini.similarities[local - 1]),
                edge_weight=float(mini.graph.weight[edge]) if edge is not None else 0.0,
                attention=float(alpha[edge]) if edge is not None else 0.0,
                contribution=float(shares.get(local, 0.0)),
                label=model.class_names[int(model.train_labels[mini.train_row_ids[local - 1]])],
            )
        )
    neighbors.sort(key=lambda n: (-n.contribution, -n.similarity, n.train_row))

    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat()
    return PredictionReport(
        predicted_class=model.class_names[predicted],
        probabilities={
            name: float(p) for name, p in zip(model.class_names, probs)
        },
        confidence=confidence,
        reliance_bucket=bucket(confidence) if confidence is not None else None,
        neighbors=neighbors,
        mini_graph=mini.to_json_dict(),
        model_id=model.weights_hash(),
        timestamp=timestamp,
    )


def predict_proba_rows(model: TrainedModel, features: np.ndarray) -> np.ndarray:
    """Mini-graph class probabilities for a batch of raw feature rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != len(model.feature_names):
        raise ValueError("features must be 2-D with the trained column count")
    filled = _impute_with_medians(features, model.medians)
    x_std = model.standardizer.transform(filled)
    out = np.empty((features.shape[0], len(model.class_names)))
    for i in range(features.shape[0]):
        _, fp, _ = _mini_graph_forward(model, x_std[i])
        out[i] = fp.probabilities()[0]
    return out
