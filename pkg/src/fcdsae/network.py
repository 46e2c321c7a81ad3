"""Dense feed-forward network in float64: forward pass, MSE loss,
backpropagation and Adam updates, plus the plain-text model file format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fcdsae.errors import DimensionError, ParseError

DEFAULT_TOPOLOGY = (10, 32, 16, 3)

MODEL_MAGIC = "FCDSAE 1"


@dataclass
class LayerParams:
    """One dense layer: weights shaped (fan_out, fan_in), biases (fan_out,)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise DimensionError("weights must be a 2-D matrix")
        if self.biases.shape != (self.weights.shape[0],):
            raise DimensionError(
                f"bias length {self.biases.shape} does not match fan_out "
                f"{self.weights.shape[0]}"
            )

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class NetworkParams:
    """Ordered dense layers; every layer uses ReLU (hidden and output)."""

    layers: list[LayerParams]

    def __post_init__(self):
        for i in range(len(self.layers) - 1):
            if self.layers[i].fan_out != self.layers[i + 1].fan_in:
                raise DimensionError(
                    f"layer {i} fan_out {self.layers[i].fan_out} != "
                    f"layer {i + 1} fan_in {self.layers[i + 1].fan_in}"
                )

    @property
    def topology(self) -> tuple[int, ...]:
        return (self.layers[0].fan_in,) + tuple(l.fan_out for l in self.layers)

    @property
    def n_hidden(self) -> int:
        return len(self.layers) - 1

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [LayerParams(l.weights.copy(), l.biases.copy()) for l in self.layers]
        )


@dataclass
class ForwardTrace:
    """Per-layer pre/post activations for one batch; inputs kept for backprop."""

    inputs: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]

    @property
    def batch_size(self) -> int:
        return self.inputs.shape[0]


def init_network(topology: tuple[int, ...] = DEFAULT_TOPOLOGY,
                 seed: int = 0) -> NetworkParams:
    """He-uniform initialization scaled by fan_in, biases zero."""
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(topology[:-1], topology[1:]):
        limit = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(LayerParams(w, np.zeros(fan_out)))
    return NetworkParams(layers)


def forward(params: NetworkParams, batch: np.ndarray) -> ForwardTrace:
    """Run the batch through every layer, recording pre/post activations.

    ReLU is applied after every layer, including the output layer.
    """
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[1] != params.layers[0].fan_in:
        raise DimensionError(
            f"input width {batch.shape[1]} does not match layer 0 fan_in "
            f"{params.layers[0].fan_in}"
        )
    pre, post = [], []
    x = batch
    for i, layer in enumerate(params.layers):
        if x.shape[1] != layer.fan_in:
            raise DimensionError(
                f"activation width {x.shape[1]} does not match layer {i} "
                f"fan_in {layer.fan_in}"
            )
        z = x @ layer.weights.T + layer.biases
        a = np.maximum(z, 0.0)
        pre.append(z)
        post.append(a)
        x = a
    return ForwardTrace(inputs=batch, pre=pre, post=post)


def mse_loss(output: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over all batch entries and output components."""
    output = np.asarray(output, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if output.shape != targets.shape:
        raise DimensionError(
            f"output shape {output.shape} != target shape {targets.shape}"
        )
    diff = output - targets
    return float(np.sum(diff * diff) / diff.size)


def backward(trace: ForwardTrace, params: NetworkParams, targets: np.ndarray,
             sparsity_grads: list[np.ndarray] | None = None
             ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of the total loss w.r.t. every weight matrix and bias vector.

    `sparsity_grads`, when given, holds one (batch x width) matrix per hidden
    layer; each is added to that layer's post-activation delta before the
    delta is pushed through the ReLU. The ReLU subgradient at exactly 0 is 0.
    """
    targets = np.asarray(targets, dtype=np.float64)
    out = trace.output
    if out.shape != targets.shape:
        raise DimensionError(
            f"output shape {out.shape} != target shape {targets.shape}"
        )
    n_layers = len(params.layers)
    if len(trace.pre) != n_layers:
        raise DimensionError("trace depth does not match network depth")
    if sparsity_grads is not None and len(sparsity_grads) != n_layers - 1:
        raise DimensionError(
            f"expected {n_layers - 1} sparsity gradient matrices, "
            f"got {len(sparsity_grads)}"
        )

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * n_layers
    # dJ/d(post) at the output layer for mean-over-all-entries MSE
    delta_post = 2.0 * (out - targets) / out.size
    for i in range(n_layers - 1, -1, -1):
        if i < n_layers - 1 and sparsity_grads is not None:
            sg = sparsity_grads[i]
            if sg.shape != trace.post[i].shape:
                raise DimensionError(
                    f"sparsity gradient shape {sg.shape} does not match hidden "
                    f"layer {i} activations {trace.post[i].shape}"
                )
            delta_post = delta_post + sg
        delta_pre = delta_post * (trace.pre[i] > 0.0)
        prev_act = trace.inputs if i == 0 else trace.post[i - 1]
        grad_w = delta_pre.T @ prev_act
        grad_b = delta_pre.sum(axis=0)
        grads[i] = (grad_w, grad_b)
        if i > 0:
            delta_post = delta_pre @ params.layers[i].weights
    return grads


@dataclass
class AdamState:
    """Adam moment buffers and hyperparameters for one network."""

    first_moment: list[tuple[np.ndarray, np.ndarray]]
    second_moment: list[tuple[np.ndarray, np.ndarray]]
    step_count: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_network(cls, params: NetworkParams, lr: float = 0.001,
                    beta1: float = 0.9, beta2: float = 0.999,
                    eps: float = 1e-8) -> "AdamState":
        zeros = lambda: [(np.zeros_like(l.weights), np.zeros_like(l.biases))
                         for l in params.layers]
        return cls(first_moment=zeros(), second_moment=zeros(),
                   lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: NetworkParams,
              grads: list[tuple[np.ndarray, np.ndarray]],
              state: AdamState) -> tuple[NetworkParams, AdamState]:
    """One bias-corrected Adam update; parameters are updated in place.

    Rejects the whole step if any gradient entry is non-finite.
    """
    if len(grads) != len(params.layers):
        raise DimensionError("gradient list length does not match network")
    for i, (gw, gb) in enumerate(grads):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise ValueError(f"non-finite gradient in layer {i}; update rejected")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for i, layer in enumerate(params.layers):
        for buf_idx, (tensor, g) in enumerate(
                [(layer.weights, grads[i][0]), (layer.biases, grads[i][1])]):
            m = state.first_moment[i][buf_idx]
            v = state.second_moment[i][buf_idx]
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            tensor -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(params: NetworkParams, path, standardizer=None) -> None:
    """Write the versioned plain-text model file.

    Optional STDMEAN/STDSTD lines (written between the header and the first
    layer) carry the frozen standardization statistics so a saved model is
    directly usable for evaluation.
    """
    lines = [MODEL_MAGIC]
    if standardizer is not None:
        lines.append("STDMEAN " + " ".join(_fmt(v) for v in standardizer.mean))
        lines.append("STDSTD " + " ".join(_fmt(v) for v in standardizer.std))
    for layer in params.layers:
        lines.append(f"LAYER {layer.fan_in} {layer.fan_out}")
        for row in layer.weights:
            lines.append(" ".join(_fmt(v) for v in row))
        lines.append("BIAS")
        lines.append(" ".join(_fmt(v) for v in layer.biases))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path):
    """Read a model file; returns (NetworkParams, Standardizer or None)."""
    from fcdsae.dataset import Standardizer

    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ParseError(f"{path}: missing '{MODEL_MAGIC}' header")
    idx = 1
    mean = std = None
    while idx < len(lines) and lines[idx].startswith(("STDMEAN", "STDSTD")):
        tag, *vals = lines[idx].split()
        vec = np.array([float(v) for v in vals])
        if tag == "STDMEAN":
            mean = vec
        else:
            std = vec
        idx += 1
    layers = []
    while idx < len(lines):
        head = lines[idx].split()
        if head[0] != "LAYER" or len(head) != 3:
            raise ParseError(f"{path} line {idx + 1}: expected LAYER header")
        fan_in, fan_out = int(head[1]), int(head[2])
        idx += 1
        rows = []
        for r in range(fan_out):
            vals = [float(v) for v in lines[idx].split()]
            if len(vals) != fan_in:
                raise ParseError(
                    f"{path} line {idx + 1}: expected {fan_in} weights"
                )
            rows.append(vals)
            idx += 1
        if lines[idx] != "BIAS":
            raise ParseError(f"{path} line {idx + 1}: expected BIAS line")
        idx += 1
        biases = [float(v) for v in lines[idx].split()]
        if len(biases) != fan_out:
            raise ParseError(f"{path} line {idx + 1}: expected {fan_out} biases")
        idx += 1
        layers.append(LayerParams(np.array(rows), np.array(biases)))
    standardizer = None
    if mean is not None and std is not None:
        standardizer = Standardizer(mean=mean, std=std)
    return NetworkParams(layers), standardizer
