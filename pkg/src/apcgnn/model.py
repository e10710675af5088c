"""Forward pass and losses for the patient-centric graph classifier.

One edge-convolution stage feeds a confidence-guided blend with the
projected self-features, then a linear head. Two ablation variants ride the
same parameter set: ``vanilla_gcn`` (attention pinned to 1, no blending) and
``mlp`` (graph ignored, self path only). Self-information never enters the
message passing; it reaches the classifier only through the blend, so
clamping the confidence isolates either evidence path exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .graph import PatientGraph

VARIANTS = ("apcgnn", "vanilla_gcn", "mlp")


@dataclass
class ModelParams:
    """All learnable weights, keyed by what each map does."""

    msg_weight: np.ndarray      # features -> hidden, neighbor message transform
    self_proj: np.ndarray       # features -> hidden, self-feature projection
    attn_proj: np.ndarray       # features -> hidden, attention context projection
    attn_hidden_w: np.ndarray   # 2*hidden -> hidden
    attn_hidden_b: np.ndarray
    attn_out_w: np.ndarray      # hidden -> 1
    attn_out_b: np.ndarray
    conf_hidden_w: np.ndarray   # hidden -> hidden
    conf_hidden_b: np.ndarray
    conf_out_w: np.ndarray      # hidden -> 1
    conf_out_b: np.ndarray
    head_w: np.ndarray          # hidden -> classes
    head_b: np.ndarray

    @property
    def n_features(self) -> int:
        return self.msg_weight.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.msg_weight.shape[1]

    @property
    def n_classes(self) -> int:
        return self.head_w.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, arrays: dict[str, np.ndarray]) -> "ModelParams":
        return cls(**{f.name: np.asarray(arrays[f.name], dtype=np.float64) for f in fields(cls)})


def param_shapes(n_features: int, hidden_dim: int, n_classes: int = 3) -> dict[str, tuple[int, int]]:
    d, h, c = n_features, hidden_dim, n_classes
    return {
        "msg_weight": (d, h),
        "self_proj": (d, h),
        "attn_proj": (d, h),
        "attn_hidden_w": (2 * h, h),
        "attn_hidden_b": (1, h),
        "attn_out_w": (h, 1),
        "attn_out_b": (1, 1),
        "conf_hidden_w": (h, h),
        "conf_hidden_b": (1, h),
        "conf_out_w": (h, 1),
        "conf_out_b": (1, 1),
        "head_w": (h, c),
        "head_b": (1, c),
    }


CONFIDENCE_BIAS_INIT = 5.0


def init_params(
    rng: np.random.Generator, n_features: int, hidden_dim: int, n_classes: int = 3
) -> ModelParams:
    """Glorot-uniform weight matrices, zero biases, in a fixed draw order.

    Exception: the confidence gate's output bias starts positive so training
    begins graph-dominant and the self-feature shortcut only opens where the
    loss genuinely asks for it (same rationale as LSTM forget-gate bias).
    """
    arrays: dict[str, np.ndarray] = {}
    for name, (rows, cols) in param_shapes(n_features, hidden_dim, n_classes).items():
        if name.endswith("_b"):
            arrays[name] = np.zeros((rows, cols))
        else:
            arrays[name] = ad.glorot_uniform(rng, rows, cols)
    arrays["conf_out_b"] = arrays["conf_out_b"] + CONFIDENCE_BIAS_INIT
    return ModelParams.from_dict(arrays)


# ---------------------------------------------------------------------------
# Stages


def project(x: Tensor, weight: Tensor) -> Tensor:
    """Linear projection of node features into the hidden space."""
    return ad.matmul(x, weight)


def attention_scores(
    z: Tensor,
    graph: PatientGraph,
    hidden_w: Tensor,
    hidden_b: Tensor,
    out_w: Tensor,
    out_b: Tensor,
) -> Tensor:
    """Per-edge gate in (0,1) from the concatenated [receiver || sender] contexts."""
    z_dst = ad.gather_rows(z, graph.dst)
    z_src = ad.gather_rows(z, graph.src)
    pair = ad.concat_cols(z_dst, z_src)
    hidden = ad.relu(ad.add(ad.matmul(pair, hidden_w), hidden_b))
    return ad.sigmoid(ad.add(ad.matmul(hidden, out_w), out_b))


def edge_conv(
    x: Tensor,
    graph: PatientGraph,
    alpha: Tensor,
    msg_weight: Tensor,
    mean_aggregate: bool = False,
) -> Tensor:
    """ReLU of the attention- and similarity-weighted neighbor message sum.

    Nodes without in-edges (possible only in hand-built graphs) get zeros.
    """
    if alpha.value.shape != (graph.edge_count, 1):
        raise ad.ShapeError("alpha must provide one gate per edge")
    messages = ad.gather_rows(ad.matmul(x, msg_weight), graph.src)
    coeff = ad.mul(alpha, Tensor(graph.weight.reshape(-1, 1)))
    gathered = ad.scatter_add_rows(ad.mul(messages, coeff), graph.dst, graph.node_count)
    if mean_aggregate:
        inv_deg = np.where(graph.k_per_node > 0, 1.0 / np.maximum(graph.k_per_node, 1), 0.0)
        gathered = ad.mul(gathered, Tensor(inv_deg.reshape(-1, 1)))
    return ad.relu(gathered)


def confidence_scores(
    h: Tensor, hidden_w: Tensor, hidden_b: Tensor, out_w: Tensor, out_b: Tensor
) -> Tensor:
    """Node-wise reliability gate in (0,1) from the message embedding.

    A learned relative trust indicator for blending, not a calibrated
    probability.
    """
    hidden = ad.relu(ad.add(ad.matmul(h, hidden_w), hidden_b))
    return ad.sigmoid(ad.add(ad.matmul(hidden, out_w), out_b))


def blend(h: Tensor, x_proj: Tensor, confidence: Tensor) -> Tensor:
    """Convex combination c*h + (1-c)*x_proj per node."""
    c = confidence.value
    if c.shape != (h.value.shape[0], 1):
        raise ad.ShapeError("confidence must be a column with one entry per node")
    if c.min() < 0.0 or c.max() > 1.0:
        raise ValueError("confidence values must lie in [0, 1]")
    ones = Tensor(np.ones_like(c))
    return ad.add(ad.mul(h, confidence), ad.mul(x_proj, ad.sub(ones, confidence)))


@dataclass
class ForwardPass:
    """Taped tensors of one forward evaluation."""

    variant: str
    graph: PatientGraph | None
    params: dict[str, Tensor]
    z: Tensor | None
    x_proj: Tensor | None
    alpha: Tensor | None
    h_msg: Tensor | None
    confidence: Tensor | None
    h_final: Tensor
    logits: Tensor

    def probabilities(self) -> np.ndarray:
        return ad.softmax_values(self.logits.value)

    def confidence_values(self) -> np.ndarray | None:
        if self.confidence is None:
            return None
        return self.confidence.value.ravel().copy()

    def trace(self) -> "ForwardTrace":
        def val(t: Tensor | None):
            return None if t is None else t.value.copy()

        return ForwardTrace(
            variant=self.variant,
            z=val(self.z),
            x_proj=val(self.x_proj),
            alpha=None if self.alpha is None else self.alpha.value.ravel().copy(),
            h_msg=val(self.h_msg),
            confidence=self.confidence_values(),
            h_final=self.h_final.value.copy(),
            logits=self.logits.value.copy(),
            probs=self.probabilities(),
        )

    def gradients(self) -> dict[str, np.ndarray]:
        """Per-parameter gradients; call after backward() on a taped loss."""
        grads: dict[str, np.ndarray] = {}
        for name, tensor in self.params.items():
            grads[name] = (
                tensor.grad if tensor.grad is not None else np.zeros_like(tensor.value)
            )
        return grads


@dataclass
class ForwardTrace:
    """Plain-array snapshot of the per-node intermediates."""

    variant: str
    z: np.ndarray | None
    x_proj: np.ndarray | None
    alpha: np.ndarray | None
    h_msg: np.ndarray | None
    confidence: np.ndarray | None
    h_final: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def forward(
    x: np.ndarray,
    graph: PatientGraph | None,
    params: ModelParams,
    variant: str = "apcgnn",
    confidence_clamp: float | None = None,
    gcn_mean_aggregation: bool = False,
    tape: Tape | None = None,
) -> ForwardPass:
    """Run one forward pass; pass a Tape to record gradients."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant != "mlp":
        if graph is None:
            raise ValueError(f"variant {variant!r} requires a graph")
        if graph.node_count != x.shape[0]:
            raise ValueError("graph node count must match the feature rows")
    p = {
        name: (tape.watch(arr) if tape is not None else Tensor(arr))
        for name, arr in params.as_dict().items()
    }
    xt = Tensor(x)
    n = x.shape[0]

    if variant == "mlp":
        x_proj = project(xt, p["self_proj"])
        h_final = ad.relu(x_proj)
        logits = ad.add(ad.matmul(h_final, p["head_w"]), p["head_b"])
        return ForwardPass(variant, graph, p, None, x_proj, None, None, None, h_final, logits)

    if variant == "vanilla_gcn":
        alpha = Tensor(np.ones((graph.edge_count, 1)))
        h_msg = edge_conv(xt, graph, alpha, p["msg_weight"], mean_aggregate=gcn_mean_aggregation)
        logits = ad.add(ad.matmul(h_msg, p["head_w"]), p["head_b"])
        return ForwardPass(variant, graph, p, None, None, alpha, h_msg, None, h_msg, logits)

    z = project(xt, p["attn_proj"])
    alpha = attention_scores(
        z, graph, p["attn_hidden_w"], p["attn_hidden_b"], p["attn_out_w"], p["attn_out_b"]
    )
    h_msg = edge_conv(xt, graph, alpha, p["msg_weight"])
    x_proj = project(xt, p["self_proj"])
    if confidence_clamp is None:
        conf = confidence_scores(
            h_msg, p["conf_hidden_w"], p["conf_hidden_b"], p["conf_out_w"], p["conf_out_b"]
        )
        h_final = blend(h_msg, x_proj, conf)
    else:
        if not 0.0 <= confidence_clamp <= 1.0:
            raise ValueError("confidence_clamp must lie in [0, 1]")
        conf = Tensor(np.full((n, 1), float(confidence_clamp)))
        # Clamped extremes short-circuit the blend so the unused path cannot
        # perturb the output even at the bit level.
        if confidence_clamp == 1.0:
            h_final = h_msg
        elif confidence_clamp == 0.0:
            h_final = x_proj
        else:
            h_final = blend(h_msg, x_proj, conf)
    logits = ad.add(ad.matmul(h_final, p["head_w"]), p["head_b"])
    return ForwardPass(variant, graph, p, z, x_proj, alpha, h_msg, conf, h_final, logits)


# ---------------------------------------------------------------------------
# Losses


@dataclass(frozen=True)
class LossBreakdown:
    """Total objective and its parts; total == cross_entropy + weight * consistency."""

    total: float
    cross_entropy: float
    consistency: float
    weight: float

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "cross_entropy": self.cross_entropy,
            "consistency": self.consistency,
            "weight": self.weight,
        }


def consistency_loss(h: Tensor, graph: PatientGraph) -> Tensor:
    """Mean squared embedding difference across all graph edges."""
    if graph.edge_count == 0:
        warnings.warn("consistency loss over an empty edge set is 0", stacklevel=2)
        return Tensor(np.zeros((1, 1)))
    diff = ad.sub(ad.gather_rows(h, graph.dst), ad.gather_rows(h, graph.src))
    return ad.scale(ad.square_norm(diff), 1.0 / graph.edge_count)


def total_loss(
    fp: ForwardPass,
    labels: np.ndarray,
    train_mask: np.ndarray,
    consistency_weight: float,
    consistency_on: str = "h",
) -> tuple[Tensor, LossBreakdown]:
    """Masked cross-entropy plus weighted consistency over all edges."""
    if consistency_on not in ("h", "h_final"):
        raise ValueError("consistency_on must be 'h' or 'h_final'")
    ce = ad.softmax_cross_entropy(fp.logits, labels, train_mask)
    target = fp.h_msg if consistency_on == "h" else fp.h_final
    # Consistency regularization belongs to the full method; the baseline
    # variants are defined without it.
    if fp.variant != "apcgnn" or target is None or fp.graph is None:
        cons = Tensor(np.zeros((1, 1)))
    else:
        cons = consistency_loss(target, fp.graph)
    total = ad.add(ce, ad.scale(cons, consistency_weight))
    breakdown = LossBreakdown(
        total=float(total.value[0, 0]),
        cross_entropy=float(ce.value[0, 0]),
        consistency=float(cons.value[0, 0]),
        weight=float(consistency_weight),
    )
    return total, breakdown
