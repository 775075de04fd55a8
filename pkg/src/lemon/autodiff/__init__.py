"""Tape-based reverse-mode autodiff, optimizers, and checkpoints."""

from .checkpoint import load_checkpoint, save_checkpoint
from .engine import (
    Tape,
    Tensor,
    add,
    backward,
    broadcast_to,
    concat,
    div,
    gather_rows,
    gelu,
    layer_norm,
    matmul,
    max_detached,
    mul,
    neg,
    no_grad,
    power,
    relu,
    reshape,
    scatter,
    scatter_rows,
    softmax,
    sub,
    take,
    tanh,
    tcos,
    texp,
    tlog,
    tmean,
    transpose,
    tsin,
    tsqrt,
    tsum,
)
from .optim import AdamW, CosineWarmupSchedule, clip_global_norm, global_grad_norm, sgd_step

__all__ = [
    "AdamW", "CosineWarmupSchedule", "Tape", "Tensor",
    "add", "backward", "broadcast_to", "clip_global_norm", "concat", "div",
    "gather_rows", "gelu", "global_grad_norm", "layer_norm", "load_checkpoint",
    "matmul", "max_detached", "mul", "neg", "no_grad", "power", "relu",
    "reshape", "save_checkpoint", "scatter", "scatter_rows", "sgd_step",
    "softmax", "sub", "take", "tanh", "tcos", "texp", "tlog", "tmean",
    "transpose", "tsin", "tsqrt", "tsum",
]
