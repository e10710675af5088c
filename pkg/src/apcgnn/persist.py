"""Versioned JSON persistence for trained models.

Floats are serialized via JSON's round-trip repr, so a save/load cycle
reproduces predictions bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import ModelParams, param_shapes
from .data import Standardizer
from .training import TrainConfig, TrainedModel
from .model import LossBreakdown

SCHEMA_VERSION = 1


def _array_payload(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _array_from_payload(payload: dict, expected: tuple[int, ...] | None = None) -> np.ndarray:
    shape = tuple(payload["shape"])
    data = np.asarray(payload["data"], dtype=np.float64)
    if data.size != int(np.prod(shape)):
        raise ValueError(f"array data length {data.size} does not match shape {shape}")
    if expected is not None and shape != expected:
        raise ValueError(f"array shape {shape} does not match expected {expected}")
    return data.reshape(shape)


def model_to_dict(model: TrainedModel) -> dict:
    cfg = model.config
    return {
        "schema_version": SCHEMA_VERSION,
        "hidden_dim": cfg.hidden_dim,
        "n_features": len(model.feature_names),
        "n_classes": len(model.class_names),
        "class_names": list(model.class_names),
        "feature_names": list(model.feature_names),
        "standardizer": {
            "mean": model.standardizer.mean.tolist(),
            "std": model.standardizer.std.tolist(),
        },
        "medians": model.medians.tolist(),
        "k_min": cfg.k_min,
        "k_max": cfg.k_max,
        "variant": cfg.variant,
        "config": cfg.to_dict(),
        "weights": {
            name: _array_payload(arr) for name, arr in model.params.as_dict().items()
        },
        "train_features": _array_payload(model.train_features),
        "train_labels": [int(v) for v in model.train_labels],
        "loss_curve": [b.to_dict() for b in model.loss_curve],
    }


def model_from_dict(payload: dict) -> TrainedModel:
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version: {version!r}")
    config = TrainConfig.from_dict(payload["config"])
    d = int(payload["n_features"])
    h = int(payload["hidden_dim"])
    c = int(payload["n_classes"])
    if h != config.hidden_dim:
        raise ValueError("hidden_dim disagrees with the embedded config")
    shapes = param_shapes(d, h, c)
    weights = payload["weights"]
    missing = set(shapes) - set(weights)
    if missing:
        raise ValueError(f"missing weight arrays: {sorted(missing)}")
    arrays = {
        name: _array_from_payload(weights[name], expected=shapes[name])
        for name in shapes
    }
    feature_names = tuple(payload["feature_names"])
    class_names = tuple(payload["class_names"])
    if len(feature_names) != d or len(class_names) != c:
        raise ValueError("feature/class name lists disagree with declared sizes")
    standardizer = Standardizer(
        mean=np.asarray(payload["standardizer"]["mean"], dtype=np.float64),
        std=np.asarray(payload["standardizer"]["std"], dtype=np.float64),
    )
    if standardizer.mean.shape != (d,) or standardizer.std.shape != (d,):
        raise ValueError("standardizer statistics must have one entry per feature")
    medians = np.asarray(payload["medians"], dtype=np.float64)
    if medians.shape != (d,):
        raise ValueError("medians must have one entry per feature")
    train_features = _array_from_payload(payload["train_features"])
    if train_features.ndim != 2 or train_features.shape[1] != d:
        raise ValueError("train_features must be 2-D with one column per feature")
    train_labels = np.asarray(payload["train_labels"], dtype=np.int64)
    if train_labels.shape != (train_features.shape[0],):
        raise ValueError("train_labels must align with train_features rows")
    curve = [
        LossBreakdown(
            total=b["total"],
            cross_entropy=b["cross_entropy"],
            consistency=b["consistency"],
            weight=b["weight"],
        )
        for b in payload.get("loss_curve", [])
    ]
    return TrainedModel(
        params=ModelParams.from_dict(arrays),
        standardizer=standardizer,
        medians=medians,
        train_features=train_features,
        train_labels=train_labels,
        feature_names=feature_names,
        class_names=class_names,
        config=config,
        loss_curve=curve,
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
