"""KL-divergence sparsity penalty on hidden-layer batch-mean activations,
and its analytic gradient for injection into backpropagation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fcdsae.errors import DomainError
from fcdsae.network import ForwardTrace


@dataclass(frozen=True)
class SparsityConfig:
    """Target activation level, penalty weight, and the clamp bound that keeps
    the KL terms defined for unbounded ReLU activations."""

    xi: float = 0.05
    psi: float = 1e-3
    clamp_eps: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.xi < 1.0:
            raise DomainError(f"xi must lie in (0,1), got {self.xi}")
        if self.psi < 0.0:
            raise DomainError(f"psi must be >= 0, got {self.psi}")
        if not 0.0 < self.clamp_eps < 0.5:
            raise DomainError(f"clamp_eps must lie in (0, 0.5), got {self.clamp_eps}")


@dataclass
class ActivationSummary:
    """Per-unit batch-mean activations of one hidden layer.

    `raw` is the unclamped mean (needed to know which units were clamped);
    `clamped` is the value the penalty actually uses.
    """

    layer_index: int
    raw: np.ndarray
    clamped: np.ndarray

    @property
    def was_clamped(self) -> np.ndarray:
        return self.raw != self.clamped


def average_activation(trace: ForwardTrace, layer_index: int,
                       clamp_eps: float = 1e-6) -> ActivationSummary:
    """Batch-mean activation of each unit in one hidden layer, clamped into
    [clamp_eps, 1 - clamp_eps]."""
    if not 0 <= layer_index < len(trace.post) - 1:
        raise DomainError(f"layer {layer_index} is not a hidden layer")
    acts = trace.post[layer_index]
    if acts.shape[0] < 1:
        raise DomainError("empty batch")
    raw = acts.mean(axis=0)
    clamped = np.clip(raw, clamp_eps, 1.0 - clamp_eps)
    return ActivationSummary(layer_index=layer_index, raw=raw, clamped=clamped)


def kl_divergence(xi: float, xi_k: float) -> float:
    """KL divergence between Bernoulli(xi) and Bernoulli(xi_k), natural log."""
    if not 0.0 < xi < 1.0:
        raise DomainError(f"xi must lie in (0,1), got {xi}")
    if not 0.0 < xi_k < 1.0:
        raise DomainError(f"xi_k must lie in (0,1), got {xi_k}")
    return xi * math.log(xi / xi_k) + (1.0 - xi) * math.log((1.0 - xi) / (1.0 - xi_k))


def penalty_total(summaries: list[ActivationSummary], cfg: SparsityConfig) -> float:
    """psi times the summed KL divergence over all penalized hidden units."""
    total = 0.0
    for summary in summaries:
        for xi_k in summary.clamped:
            total += kl_divergence(cfg.xi, float(xi_k))
    return cfg.psi * total


def penalty_gradient(summary: ActivationSummary, cfg: SparsityConfig,
                     batch_size: int) -> np.ndarray:
    """Per-sample gradient of the penalty w.r.t. each unit's activation.

    d/dh of psi*KL(xi || mean(h)) through the batch mean is
    (psi/p) * (-xi/xi_k + (1-xi)/(1-xi_k)); a clamped mean is a constant,
    so its gradient is zero. Returns a (batch_size x width) matrix.
    """
    xi_k = summary.clamped
    per_unit = (cfg.psi / batch_size) * (
        -cfg.xi / xi_k + (1.0 - cfg.xi) / (1.0 - xi_k)
    )
    per_unit = np.where(summary.was_clamped, 0.0, per_unit)
    return np.tile(per_unit, (batch_size, 1))


def total_loss(mse: float, summaries: list[ActivationSummary],
               cfg: SparsityConfig) -> float:
    """MSE plus the sparsity penalty. Bit-identical to the MSE when psi=0."""
    if cfg.psi == 0.0:
        return mse
    return mse + penalty_total(summaries, cfg)
