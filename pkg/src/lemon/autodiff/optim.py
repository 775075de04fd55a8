"""Optimizers and learning-rate schedule for parameter dictionaries.

Parameters are named float64 tensors; gradients are passed as a matching
name -> array dict.  AdamW uses decoupled weight decay, a global gradient
norm clip (default 1.0), and a cosine schedule with linear warmup over the
first 10% of steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import AutodiffError, DimensionError
from .engine import Tensor


@dataclass(frozen=True)
class CosineWarmupSchedule:
    """Linear ramp from 0 over the warmup steps, then cosine decay to zero.

    ``step`` counts from 0, so the very first step uses lr = 0 when warmup
    is active.
    """

    base_lr: float
    total_steps: int
    warmup_frac: float = 0.1

    @property
    def warmup_steps(self) -> int:
        return int(self.warmup_frac * self.total_steps)

    def __call__(self, step: int) -> float:
        w = self.warmup_steps
        if w > 0 and step < w:
            return self.base_lr * step / w
        span = max(self.total_steps - w, 1)
        progress = min(max(step - w, 0) / span, 1.0)
        return self.base_lr * 0.5 * (1.0 + math.cos(math.pi * progress))


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float):
    """Scale all gradients so the global L2 norm is at most ``max_norm``.

    Returns (clipped grads, pre-clip norm); input dict is not mutated.
    """
    norm = global_grad_norm(grads)
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return dict(grads), norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


class AdamW:
    """Decoupled-weight-decay Adam over a named parameter dict."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-4,
                 weight_decay: float = 1e-4, betas: tuple[float, float] = (0.9, 0.999),
                 eps: float = 1e-8, schedule: CosineWarmupSchedule | None = None,
                 clip_norm: float | None = 1.0):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.schedule = schedule
        self.clip_norm = clip_norm
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def current_lr(self) -> float:
        return self.schedule(self.step_count) if self.schedule else self.lr

    def step(self, grads: dict[str, np.ndarray]) -> dict[str, float]:
        """One update; returns {'lr', 'grad_norm'} for logging."""
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise AutodiffError(f"non-finite gradient for parameter {name!r}")
            if g.shape != self.params[name].data.shape:
                raise DimensionError(
                    f"gradient shape {g.shape} != parameter shape "
                    f"{self.params[name].data.shape} for {name!r}"
                )
        grads, norm = clip_global_norm(grads, self.clip_norm)
        lr = self.current_lr()
        b1, b2 = self.betas
        t = self.step_count + 1
        bias1 = 1.0 - b1**t
        bias2 = 1.0 - b2**t
        for name, g in grads.items():
            p = self.params[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            p.data = p.data - lr * (m_hat / (np.sqrt(v_hat) + self.eps)
                                    + self.weight_decay * p.data)
        self.step_count = t
        return {"lr": lr, "grad_norm": norm}


def sgd_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], lr: float):
    """Plain in-place gradient step p <- p - lr * g (meta-learning inner loop)."""
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.data.shape:
            raise DimensionError(
                f"gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}"
            )
        p.data = p.data - lr * g
