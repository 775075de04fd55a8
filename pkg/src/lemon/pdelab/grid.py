"""Space-time sampling layout for trajectory datasets."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Grid:
    """Uniform periodic spatial grid plus the input/output frame times.

    Input frames sample ``[0, input_fraction * t_final]`` inclusive; output
    frames sample the remaining ``(input_fraction * t_final, t_final]`` with
    the first output time strictly after the last input time.
    """

    n_x: int = 128
    l_x: float = 1.0
    n_t_in: int = 8
    n_t_out: int = 16
    t_final: float = 1.0
    input_fraction: float = 0.4

    def __post_init__(self):
        if self.n_x < 16:
            raise ConfigError(f"n_x must be >= 16, got {self.n_x}")
        if self.n_t_in < 1 or self.n_t_out < 1:
            raise ConfigError("need at least one input and one output frame")
        if not 0.0 < self.input_fraction < 1.0:
            raise ConfigError("input_fraction must lie in (0, 1)")
        if self.t_final <= 0:
            raise ConfigError("t_final must be positive")

    @property
    def dx(self) -> float:
        return self.l_x / self.n_x

    @property
    def x(self) -> np.ndarray:
        """Cell-point coordinates x_j = j * l_x / n_x (periodic, no endpoint)."""
        return np.arange(self.n_x) * self.dx

    @property
    def t_split(self) -> float:
        """Last input time; all output times are strictly later."""
        return self.input_fraction * self.t_final

    @property
    def input_times(self) -> np.ndarray:
        if self.n_t_in == 1:
            return np.array([0.0])
        return np.linspace(0.0, self.t_split, self.n_t_in)

    @property
    def output_times(self) -> np.ndarray:
        step = (self.t_final - self.t_split) / self.n_t_out
        return self.t_split + step * np.arange(1, self.n_t_out + 1)

    @property
    def all_times(self) -> np.ndarray:
        return np.concatenate([self.input_times, self.output_times])

    def with_domain(self, l_x: float | None = None, t_final: float | None = None) -> "Grid":
        """Same frame layout on a family-specific domain/horizon."""
        kwargs = {}
        if l_x is not None:
            kwargs["l_x"] = l_x
        if t_final is not None:
            kwargs["t_final"] = t_final
        return replace(self, **kwargs) if kwargs else self
