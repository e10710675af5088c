"""Patient-similarity graphs: adaptive k-NN construction and local mini-graphs.

Edges are directed. Edge (src=j, dst=i) means patient j is one of patient i's
selected neighbors and j's message flows into i. Per-node neighborhood sizes
interpolate between k_min and k_max through a sigmoid of the node's mean
standardized feature, so the amount of context adapts per patient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import sigmoid_values


@dataclass(frozen=True)
class PatientGraph:
    """Directed weighted edge list over patient nodes."""

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    k_per_node: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "src", np.asarray(self.src, dtype=np.int64))
        object.__setattr__(self, "dst", np.asarray(self.dst, dtype=np.int64))
        object.__setattr__(self, "weight", np.asarray(self.weight, dtype=np.float64))
        object.__setattr__(self, "k_per_node", np.asarray(self.k_per_node, dtype=np.int64))
        if not (self.src.shape == self.dst.shape == self.weight.shape):
            raise ValueError("edge arrays must align")
        if np.any(self.src == self.dst):
            raise ValueError("self-edges are not allowed")
        if self.weight.size and not np.isfinite(self.weight).all():
            raise ValueError("edge weights must be finite")
        in_degree = np.bincount(self.dst, minlength=self.node_count)
        if not np.array_equal(in_degree, self.k_per_node):
            raise ValueError("in-degrees must match k_per_node")

    @property
    def edge_count(self) -> int:
        return self.src.size

    def in_neighbors(self, node: int) -> np.ndarray:
        return self.src[self.dst == node]

    def to_json_dict(self) -> dict:
        return {
            "node_count": int(self.node_count),
            "edges": [
                {"src": int(s), "dst": int(d), "weight": float(w)}
                for s, d, w in zip(self.src, self.dst, self.weight)
            ],
            "k_per_node": [int(k) for k in self.k_per_node],
        }


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of two vectors; 0 when either norm is below 1e-12."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    if u.shape != v.shape:
        raise ValueError(f"vector lengths differ: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < 1e-12 or nv < 1e-12:
        return 0.0
    return float(u @ v / (nu * nv))


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    safe = np.where(norms < 1e-12, 1.0, norms)
    unit = x / safe
    unit[norms.ravel() < 1e-12] = 0.0  # zero-norm rows are dissimilar to all
    return unit


def _canonical_row_indices(unit: np.ndarray) -> np.ndarray:
    """Lowest row index carrying each distinct (normalized) row."""
    _, first, inverse = np.unique(unit, axis=0, return_index=True, return_inverse=True)
    return first[inverse.ravel()]


def cosine_matrix(x: np.ndarray) -> np.ndarray:
    """All-pairs cosine similarity over row vectors.

    Direction-identical rows are canonicalized to bitwise-identical
    similarities (BLAS products round position-dependently, which would
    otherwise make the lowest-index tie-break ill-defined for duplicates).
    """
    unit = _normalize_rows(np.asarray(x, dtype=np.float64))
    sims = unit @ unit.T
    canon = _canonical_row_indices(unit)
    if np.any(canon != np.arange(unit.shape[0])):
        sims = sims[np.ix_(canon, canon)]
    return sims


def cosine_to_rows(query: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cosine similarity of one vector against every row of a matrix."""
    q = np.asarray(query, dtype=np.float64).ravel()
    nq = np.linalg.norm(q)
    if nq < 1e-12:
        return np.zeros(x.shape[0])
    unit = _normalize_rows(np.asarray(x, dtype=np.float64))
    sims = unit @ (q / nq)
    canon = _canonical_row_indices(unit)
    if np.any(canon != np.arange(unit.shape[0])):
        sims = sims[canon]
    return sims


def adaptive_k(
    x: np.ndarray, k_min: int, k_max: int, max_neighbors: int | None = None
) -> int:
    """Per-node neighborhood size: sigmoid of the mean feature, rounded half up."""
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= k_min <= k_max")
    mean = float(np.asarray(x, dtype=np.float64).mean())
    raw = k_min + (k_max - k_min) * float(sigmoid_values(np.array([[mean]]))[0, 0])
    k = int(np.floor(raw + 0.5))
    hi = k_max if max_neighbors is None else min(k_max, max_neighbors)
    lo = k_min if max_neighbors is None else min(k_min, max_neighbors)
    return int(np.clip(k, lo, hi))


def _adaptive_k_vector(x: np.ndarray, k_min: int, k_max: int, max_neighbors: int) -> np.ndarray:
    means = x.mean(axis=1)
    gate = sigmoid_values(means.reshape(-1, 1)).ravel()
    k = np.floor(k_min + (k_max - k_min) * gate + 0.5).astype(np.int64)
    hi = min(k_max, max_neighbors)
    lo = min(k_min, max_neighbors)
    return np.clip(k, lo, hi)


def _build_graph(x: np.ndarray, k_min: int, k_max: int) -> PatientGraph:
    n = x.shape[0]
    sims = cosine_matrix(x)
    np.fill_diagonal(sims, -np.inf)
    k_per_node = _adaptive_k_vector(x, k_min, k_max, max_neighbors=n - 1)
    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    w_parts: list[np.ndarray] = []
    for i in range(n):
        # Stable sort on descending similarity keeps the lowest index first
        # among exact ties.
        order = np.argsort(-sims[i], kind="stable")
        chosen = order[: k_per_node[i]]
        src_parts.append(chosen)
        dst_parts.append(np.full(chosen.size, i, dtype=np.int64))
        w_parts.append(sims[i, chosen])
    return PatientGraph(
        node_count=n,
        src=np.concatenate(src_parts),
        dst=np.concatenate(dst_parts),
        weight=np.concatenate(w_parts),
        k_per_node=k_per_node,
    )


def build_adaptive_knn_graph(x: np.ndarray, k_min: int = 3, k_max: int = 10) -> PatientGraph:
    """Adaptive k-NN graph by descending cosine similarity, ties to lower index."""
    x = np.asarray(x, dtype=np.float64)
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= k_min <= k_max")
    if x.shape[0] < k_min + 1:
        raise ValueError(f"need at least k_min+1={k_min + 1} nodes, got {x.shape[0]}")
    return _build_graph(x, k_min, k_max)


def modulate_edges(graph: PatientGraph, confidence: np.ndarray) -> PatientGraph:
    """Rescale each in-edge of node i by (1 - c_i); topology is unchanged."""
    c = np.asarray(confidence, dtype=np.float64)
    if c.shape != (graph.node_count,):
        raise ValueError("confidence must provide one value per node")
    if c.size and (c.min() < 0.0 or c.max() > 1.0):
        raise ValueError("confidence values must lie in [0, 1]")
    return PatientGraph(
        node_count=graph.node_count,
        src=graph.src,
        dst=graph.dst,
        weight=graph.weight * (1.0 - c[graph.dst]),
        k_per_node=graph.k_per_node,
    )


@dataclass(frozen=True)
class MiniGraph:
    """Local graph around one unseen patient (node 0).

    Local node m >= 1 corresponds to training row ``train_row_ids[m - 1]``;
    ``similarities`` are the new patient's cosine scores for those rows, in
    descending order.
    """

    graph: PatientGraph
    train_row_ids: np.ndarray
    similarities: np.ndarray

    @property
    def neighbor_count(self) -> int:
        return self.train_row_ids.size

    def to_json_dict(self) -> dict:
        payload = self.graph.to_json_dict()
        payload["new_patient_node"] = 0
        payload["train_row_ids"] = [int(i) for i in self.train_row_ids]
        payload["similarities"] = [float(s) for s in self.similarities]
        return payload


def build_mini_graph(
    x_new: np.ndarray,
    x_train: np.ndarray,
    k: int = 10,
    k_min: int = 3,
    k_max: int = 10,
) -> MiniGraph:
    """Top-k neighbor retrieval plus a local adaptive k-NN graph.

    The new patient becomes node 0; per-node neighborhood sizes are capped
    at k (and at the local node count), so tiny training sets degrade
    gracefully instead of erroring.
    """
    x_train = np.asarray(x_train, dtype=np.float64)
    if x_train.shape[0] == 0:
        raise ValueError("training matrix is empty")
    x_new = np.asarray(x_new, dtype=np.float64).ravel()
    if x_new.shape[0] != x_train.shape[1]:
        raise ValueError("new patient dimensionality does not match training data")
    sims = cosine_to_rows(x_new, x_train)
    order = np.argsort(-sims, kind="stable")
    k_eff = min(k, x_train.shape[0])
    chosen = order[:k_eff]
    local = np.vstack([x_new.reshape(1, -1), x_train[chosen]])
    local_k_max = min(k_max, k_eff)
    local_k_min = min(k_min, local_k_max)
    graph = _build_graph(local, k_min=local_k_min, k_max=local_k_max)
    return MiniGraph(graph=graph, train_row_ids=chosen, similarities=sims[chosen])
