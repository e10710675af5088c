"""Shared test oracles: finite differences and brute-force recomputations."""

from __future__ import annotations

import numpy as np

from apcgnn.autodiff import Tape, backward
from apcgnn.model import ModelParams, forward, total_loss

FD_STEP = 1e-5


def relative_error(a: float, b: float, floor: float = 1e-6) -> float:
    """|a-b| over max(|a|, |b|, floor); the floor keeps finite-difference
    roundoff from dominating near-zero gradients."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def finite_difference(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar function of one array."""
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xp[idx] += step
        xm = x.copy()
        xm[idx] -= step
        grad[idx] = (f(xp) - f(xm)) / (2.0 * step)
    return grad


def model_loss_value(
    x, graph, arrays, labels, mask, weight, variant="apcgnn", consistency_on="h"
):
    fp = forward(x, graph, ModelParams.from_dict(arrays), variant)
    return total_loss(fp, labels, mask, weight, consistency_on)[1].total


def model_gradients(
    x, graph, params, labels, mask, weight, variant="apcgnn", consistency_on="h"
):
    tape = Tape()
    fp = forward(x, graph, params, variant, tape=tape)
    loss, _ = total_loss(fp, labels, mask, weight, consistency_on)
    backward(loss)
    return fp.gradients()


def max_gradient_mismatch(
    x, graph, params, labels, mask, weight, variant="apcgnn", step: float = FD_STEP
) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    grads = model_gradients(x, graph, params, labels, mask, weight, variant)
    arrays = params.as_dict()
    worst = 0.0
    for name, arr in arrays.items():
        for idx in np.ndindex(arr.shape):
            plus = {k: v.copy() for k, v in arrays.items()}
            plus[name][idx] += step
            minus = {k: v.copy() for k, v in arrays.items()}
            minus[name][idx] -= step
            fd = (
                model_loss_value(x, graph, plus, labels, mask, weight, variant)
                - model_loss_value(x, graph, minus, labels, mask, weight, variant)
            ) / (2.0 * step)
            worst = max(worst, relative_error(grads[name][idx], fd))
    return worst


def brute_force_neighbor_sets(x: np.ndarray, k_min: int, k_max: int):
    """O(N^2) full-sort oracle for adaptive k-NN in-neighbor sets.

    Recomputes the per-node neighborhood size from scratch (sigmoid of the
    mean feature, rounded half up, clamped) and sorts all candidates by
    (-similarity, index).
    """
    n = x.shape[0]
    sets = []
    for i in range(n):
        mean = x[i].mean()
        gate = 1.0 / (1.0 + np.exp(-mean)) if mean >= 0 else np.exp(mean) / (1 + np.exp(mean))
        k = int(np.floor(k_min + (k_max - k_min) * gate + 0.5))
        k = max(min(k_min, n - 1), min(k, min(k_max, n - 1)))
        sims = []
        for j in range(n):
            if j == i:
                continue
            ni, nj = np.linalg.norm(x[i]), np.linalg.norm(x[j])
            s = 0.0 if ni < 1e-12 or nj < 1e-12 else float(x[i] @ x[j] / (ni * nj))
            sims.append((-s, j))
        sims.sort()
        sets.append({j for _, j in sims[:k]})
    return sets
