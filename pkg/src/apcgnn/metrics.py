"""Classification metrics computed from scratch: confusion counts,
per-class and macro precision/recall/F1, and one-vs-rest ROC/AUC with
trapezoidal integration (ties grouped, which matches the rank statistic
with half credit for ties)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def confusion_matrix(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> np.ndarray:
    """Counts with true labels on rows and predictions on columns."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError("y_true and y_pred must align")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def accuracy_from_confusion(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    return float(np.trace(cm) / total)


def precision_recall_f1_from_confusion(
    cm: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-class precision/recall/F1; empty denominators yield 0."""
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    pred_totals = cm.sum(axis=0)
    true_totals = cm.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(pred_totals > 0, tp / pred_totals, 0.0)
        recall = np.where(true_totals > 0, tp / true_totals, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2.0 * precision * recall / denom, 0.0)
    return precision, recall, f1


def roc_points(
    scores: np.ndarray, positives: np.ndarray
) -> list[tuple[float | None, float, float]]:
    """(threshold, FPR, TPR) points by descending score with ties grouped.

    The leading anchor (0, 0) carries threshold ``None``. Requires at least
    one positive and one negative sample.
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = positives[order]
    points: list[tuple[float | None, float, float]] = [(None, 0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < sorted_scores.size:
        j = i
        while j < sorted_scores.size and sorted_scores[j] == sorted_scores[i]:
            tp += int(sorted_pos[j])
            fp += int(not sorted_pos[j])
            j += 1
        points.append((float(sorted_scores[i]), fp / n_neg, tp / n_pos))
        i = j
    return points


def auc_from_points(points: list[tuple[float | None, float, float]]) -> float:
    """Trapezoidal area under the (FPR, TPR) polyline."""
    area = 0.0
    for (_, x0, y0), (_, x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return float(area)


def one_vs_rest_auc(
    labels: np.ndarray, probs: np.ndarray, n_classes: int
) -> tuple[list[float | None], list[list[tuple[float | None, float, float]] | None]]:
    """Per-class AUC and ROC points; absent classes report None."""
    labels = np.asarray(labels, dtype=np.int64)
    aucs: list[float | None] = []
    curves: list[list[tuple[float | None, float, float]] | None] = []
    for cls in range(n_classes):
        positives = labels == cls
        if positives.all() or not positives.any():
            aucs.append(None)
            curves.append(None)
            continue
        pts = roc_points(probs[:, cls], positives)
        curves.append(pts)
        aucs.append(auc_from_points(pts))
    return aucs, curves


def explainability_counts(confidence: np.ndarray) -> dict[str, int]:
    """Partition by the reliance thresholds; 0.3 and 0.7 fall in the middle bucket."""
    c = np.asarray(confidence, dtype=np.float64)
    if c.size and (c.min() < 0.0 or c.max() > 1.0):
        raise ValueError("confidence values must lie in [0, 1]")
    self_dominant = int((c < 0.3).sum())
    graph_dependent = int((c > 0.7).sum())
    return {
        "self_dominant": self_dominant,
        "graph_dependent": graph_dependent,
        "intermediate": int(c.size - self_dominant - graph_dependent),
    }


@dataclass
class EvalReport:
    """Test-set evaluation summary, JSON-serializable."""

    accuracy: float
    confusion: list[list[int]]
    class_names: list[str]
    precision: list[float]
    recall: list[float]
    f1: list[float]
    auc: list[float | None]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    macro_auc: float | None
    n_test: int
    explainability: dict[str, int] | None
    roc: dict[str, list[list[float | None]]] | None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "class_names": self.class_names,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "macro_auc": self.macro_auc,
            "n_test": self.n_test,
            "explainability": self.explainability,
            "roc": self.roc,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "EvalReport":
        return cls(**{k: payload[k] for k in cls.__dataclass_fields__})


def evaluation_report(
    y_true: np.ndarray,
    y_pred: np.ndarray,
    probs: np.ndarray,
    class_names: tuple[str, ...],
    confidence: np.ndarray | None = None,
) -> EvalReport:
    """Assemble the full report from predictions and class probabilities."""
    n_classes = len(class_names)
    cm = confusion_matrix(y_true, y_pred, n_classes)
    precision, recall, f1 = precision_recall_f1_from_confusion(cm)
    aucs, curves = one_vs_rest_auc(y_true, probs, n_classes)
    defined = [a for a in aucs if a is not None]
    roc_payload = {
        class_names[i]: [[t, fpr, tpr] for t, fpr, tpr in curves[i]]
        for i in range(n_classes)
        if curves[i] is not None
    }
    return EvalReport(
        accuracy=accuracy_from_confusion(cm),
        confusion=[[int(v) for v in row] for row in cm],
        class_names=list(class_names),
        precision=[float(p) for p in precision],
        recall=[float(r) for r in recall],
        f1=[float(v) for v in f1],
        auc=aucs,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        macro_auc=float(np.mean(defined)) if defined else None,
        n_test=int(np.asarray(y_true).size),
        explainability=(
            explainability_counts(confidence) if confidence is not None else None
        ),
        roc=roc_payload or None,
    )
