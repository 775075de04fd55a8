"""Initial-condition generators, periodization, and normalization.

Two stochastic generators are provided: a superposition of sinusoidal waves
(with optional absolute-value and windowing post-ops) and a sum of Gaussians.
Sampling of the generator parameters lives in :func:`sample_ic_spec`; the
generators themselves are deterministic functions of an :class:`ICSpec`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, NormalizationError
from .grid import Grid

POSTOP_PROBABILITY = 0.1  # chance of abs-with-sign and windowing, where allowed


@dataclass(frozen=True)
class ICSpec:
    """Concrete parameters of one initial-condition draw.

    ``kind`` selects the generator; only the fields for that kind are used.
    Sinusoid: ``amplitudes``, ``modes`` (integers in [1, n_max]), ``phases``,
    plus the post-op flags.  Gaussian: ``amplitudes``, ``means``, ``widths``.
    Riemann: ``left``, ``right``, ``jump_pos`` (fraction of the domain).
    """

    kind: str
    amplitudes: tuple[float, ...] = ()
    modes: tuple[int, ...] = ()
    phases: tuple[float, ...] = ()
    n_max: int = 2
    abs_sign: int = 0  # 0 = off, otherwise +1/-1
    window: bool = False
    means: tuple[float, ...] = ()
    widths: tuple[float, ...] = ()
    left: float = 0.0
    right: float = 0.0
    jump_pos: float = 0.5


def ic_sine(spec: ICSpec, grid: Grid) -> np.ndarray:
    """u0(x) = sum_i A_i sin(2 pi n_i x / L + phi_i), with optional post-ops."""
    if spec.kind != "sine":
        raise DomainError(f"ic_sine got spec of kind {spec.kind!r}")
    for n in spec.modes:
        if not 1 <= int(n) <= spec.n_max or int(n) != n:
            raise DomainError(f"mode number {n!r} outside [1, {spec.n_max}]")
    x = grid.x
    u = np.zeros_like(x)
    for amp, n, phi in zip(spec.amplitudes, spec.modes, spec.phases, strict=True):
        k = 2.0 * np.pi * n / grid.l_x
        u += amp * np.sin(k * x + phi)
    if spec.abs_sign:
        u = spec.abs_sign * np.abs(u)
    if spec.window:
        u = u * window_bump(x, grid.l_x)
    return u


def ic_gaussian(spec: ICSpec, grid: Grid) -> np.ndarray:
    """u0(x) = sum_i A_i exp(-|x - mu_i|^2 / (2 sigma_i^2))."""
    if spec.kind != "gaussian":
        raise DomainError(f"ic_gaussian got spec of kind {spec.kind!r}")
    x = grid.x
    u = np.zeros_like(x)
    for amp, mu, sigma in zip(spec.amplitudes, spec.means, spec.widths, strict=True):
        if sigma <= 0:
            raise DomainError(f"gaussian width must be positive, got {sigma}")
        u += amp * np.exp(-((x - mu) ** 2) / (2.0 * sigma**2))
    return u


def ic_riemann(spec: ICSpec, grid: Grid) -> np.ndarray:
    """Piecewise-constant jump from ``left`` to ``right`` at ``jump_pos * L``."""
    if spec.kind != "riemann":
        raise DomainError(f"ic_riemann got spec of kind {spec.kind!r}")
    x = grid.x
    return np.where(x < spec.jump_pos * grid.l_x, spec.left, spec.right).astype(float)


def window_bump(x: np.ndarray, l_x: float) -> np.ndarray:
    """Smooth bump supported on the central 80% of [0, L).

    Zero outside [0.1L, 0.9L], one on [0.2L, 0.8L], cosine ramps between.
    """
    s = x / l_x
    w = np.zeros_like(s)
    w[(s >= 0.2) & (s <= 0.8)] = 1.0
    up = (s > 0.1) & (s < 0.2)
    w[up] = 0.5 * (1.0 - np.cos(np.pi * (s[up] - 0.1) / 0.1))
    down = (s > 0.8) & (s < 0.9)
    w[down] = 0.5 * (1.0 + np.cos(np.pi * (s[down] - 0.8) / 0.1))
    return w


def periodize(u0: np.ndarray) -> np.ndarray:
    """Remove the linear ramp so the first and last grid values agree.

    Subtracts ``slope * (x - x_0)`` with slope fixed by the endpoint values;
    a constant array is returned unchanged.
    """
    u0 = np.asarray(u0, dtype=float)
    n = u0.shape[-1]
    if n < 2:
        raise DomainError("periodize needs at least two grid points")
    ramp = np.arange(n) / (n - 1)
    return u0 - (u0[..., -1:] - u0[..., :1]) * ramp


def normalize(u0: np.ndarray, mode: str, u_max: float = 1.0, margin: float = 0.01) -> np.ndarray:
    """Rescale an initial condition.

    ``"range"``: affine map into the open interval (0, u_max), leaving a
    relative ``margin`` at each end.  ``"prob"``: divide by the plain sum so
    the values add to one (histogram convention, no dx weight).
    """
    u0 = np.asarray(u0, dtype=float)
    if mode == "range":
        lo, hi = float(u0.min()), float(u0.max())
        if hi <= lo:
            raise NormalizationError("range normalization needs max(u0) > min(u0)")
        return u_max * (margin + (1.0 - 2.0 * margin) * (u0 - lo) / (hi - lo))
    if mode == "prob":
        if np.any(u0 < 0):
            raise NormalizationError("prob normalization needs nonnegative values")
        total = float(u0.sum())
        if total == 0.0:
            raise NormalizationError("prob normalization needs a nonzero sum")
        return u0 / total
    raise DomainError(f"unknown normalization mode {mode!r}")


def sample_ic_spec(kind: str, rng: np.random.Generator, *, n_modes: int = 2, n_max: int = 2,
                   allow_postops: bool = True, n_gaussians: int = 1, l_x: float = 1.0) -> ICSpec:
    """Draw generator parameters for one initial condition.

    Sinusoid: ``n_modes`` modes with n_i uniform in [1, n_max], amplitudes in
    [0, 1], phases in (0, 2 pi); abs-with-sign and windowing are each applied
    with 10% probability when ``allow_postops``.  Gaussian: amplitudes in
    [0.2, 1], centers in the middle half of the domain, widths 5-15% of L.
    """
    if kind == "sine":
        modes = tuple(int(m) for m in rng.integers(1, n_max + 1, size=n_modes))
        amps = tuple(rng.uniform(0.0, 1.0, size=n_modes))
        phases = tuple(rng.uniform(0.0, 2.0 * np.pi, size=n_modes))
        abs_sign = 0
        window = False
        if allow_postops and rng.uniform() < POSTOP_PROBABILITY:
            abs_sign = 1 if rng.uniform() < 0.5 else -1
            window = True
        return ICSpec(kind="sine", amplitudes=amps, modes=modes, phases=phases,
                      n_max=n_max, abs_sign=abs_sign, window=window)
    if kind == "gaussian":
        amps = tuple(rng.uniform(0.2, 1.0, size=n_gaussians))
        means = tuple(rng.uniform(0.25 * l_x, 0.75 * l_x, size=n_gaussians))
        widths = tuple(rng.uniform(0.05 * l_x, 0.15 * l_x, size=n_gaussians))
        return ICSpec(kind="gaussian", amplitudes=amps, means=means, widths=widths)
    raise DomainError(f"unknown IC kind {kind!r}")
