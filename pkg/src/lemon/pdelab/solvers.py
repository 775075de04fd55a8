"""Per-family trajectory solvers.

Each solver integrates one initial condition to a sorted list of frame times
and returns an array of shape ``[len(times), n_x]``.  The menu:

* exact spectral translation for advection and the linear wave equation,
* method of lines (2nd-order central differences + RK4) for diffusion and
  the second-order Klein-Gordon / Sine-Gordon systems,
* flux-form explicit stepping for the porous-medium equation,
* integrating-factor RK4 pseudo-spectral stepping for KdV,
* stabilized semi-implicit spectral stepping for the Cahn-Hilliard-type
  fourth-order equation,
* Strang-split finite volume (Godunov flux, optional MUSCL reconstruction)
  for scalar conservation laws, with spectral or Crank-Nicolson diffusion
  for the viscous variants,
* Strang-split reaction-diffusion stepping,
* conservative drift-diffusion finite differences for the Fokker-Planck
  equation in nondimensional coordinates.

All integrators are pure functions: no global state, deterministic output.
NaN/Inf is detected after every frame and raised as :class:`SolverError`.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from ..errors import SolverError

_MAX_REFINEMENTS = 5  # dt halvings before giving up on an unstable solve


def _check_finite(u: np.ndarray, label: str):
    if not np.all(np.isfinite(u)):
        raise SolverError(f"{label}: solution became non-finite")


def _frames_shape(times, n_x) -> np.ndarray:
    return np.empty((len(times), n_x), dtype=float)


def spectral_shift(u0: np.ndarray, shift: float, l_x: float) -> np.ndarray:
    """Periodic translation u(x) -> u(x - shift) via an FFT phase ramp."""
    n = u0.shape[-1]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=l_x / n)
    return np.real(np.fft.ifft(np.fft.fft(u0) * np.exp(-1j * k * shift)))


def solve_advection(u0, times, l_x, speed) -> np.ndarray:
    """Exact solution u(x, t) = u0(x - speed * t)."""
    out = _frames_shape(times, u0.shape[-1])
    for i, t in enumerate(times):
        out[i] = spectral_shift(u0, speed * t, l_x)
    _check_finite(out, "advection")
    return out


def solve_wave_dalembert(u0, times, l_x, q) -> np.ndarray:
    """u_tt = q u_xx with zero initial velocity: the two-beam average.

    u(x, t) = (u0(x - ct) + u0(x + ct)) / 2 with c = sqrt(q).
    """
    c = np.sqrt(q)
    out = _frames_shape(times, u0.shape[-1])
    for i, t in enumerate(times):
        out[i] = 0.5 * (spectral_shift(u0, c * t, l_x) + spectral_shift(u0, -c * t, l_x))
    _check_finite(out, "wave")
    return out


def _laplacian(u: np.ndarray, dx: float) -> np.ndarray:
    return (np.roll(u, -1) - 2.0 * u + np.roll(u, 1)) / (dx * dx)


def _march_rk4(rhs, u, t0, t1, dt_target):
    """Fixed-step RK4 from t0 to t1, landing on t1 exactly."""
    span = t1 - t0
    if span <= 0:
        return u
    n_sub = max(int(np.ceil(span / dt_target)), 1)
    h = span / n_sub
    for _ in range(n_sub):
        k1 = rhs(u)
        k2 = rhs(u + 0.5 * h * k1)
        k3 = rhs(u + 0.5 * h * k2)
        k4 = rhs(u + h * k3)
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def solve_heat_mol(u0, times, l_x, q) -> np.ndarray:
    """u_t = q u_xx, method of lines: central differences in space, RK4 in time."""
    dx = l_x / u0.shape[-1]
    dt = 0.25 * dx * dx / q
    rhs = lambda u: q * _laplacian(u, dx)
    out = _frames_shape(times, u0.shape[-1])
    u, t = u0.astype(float), 0.0
    for i, t_next in enumerate(times):
        u = _march_rk4(rhs, u, t, t_next, dt)
        t = t_next
        out[i] = u
    _check_finite(out, "heat")
    return out


def solve_second_order_mol(u0, times, l_x, accel, wave_speed) -> np.ndarray:
    """u_tt = accel(u) with zero initial velocity, reduced to a first-order system.

    ``accel`` maps the displacement field to the acceleration field; the CFL
    step is set from ``wave_speed``.
    """
    n = u0.shape[-1]
    dx = l_x / n
    dt = 0.35 * dx / max(wave_speed, 1e-12)

    def rhs(y):
        u, v = y
        return np.stack([v, accel(u)])

    out = _frames_shape(times, n)
    y, t = np.stack([u0.astype(float), np.zeros(n)]), 0.0
    for i, t_next in enumerate(times):
        y = _march_rk4(rhs, y, t, t_next, dt)
        t = t_next
        out[i] = y[0]
    _check_finite(out, "second-order MOL")
    return out


def solve_klein_gordon(u0, times, l_x, q, p) -> np.ndarray:
    dx = l_x / u0.shape[-1]
    accel = lambda u: q * q * _laplacian(u, dx) - (p * p) * (q**4) * u
    return solve_second_order_mol(u0, times, l_x, accel, wave_speed=q)


def solve_sine_gordon(u0, times, l_x, q) -> np.ndarray:
    dx = l_x / u0.shape[-1]
    accel = lambda u: _laplacian(u, dx) - q * np.sin(u)
    return solve_second_order_mol(u0, times, l_x, accel, wave_speed=1.0)


def solve_porous_medium(u0, times, l_x, m) -> np.ndarray:
    """u_t = (u^m)_xx in conservative flux form with adaptive explicit stepping.

    The discrete sum of u is conserved exactly (telescoping flux update);
    the step is re-limited from the current degenerate diffusivity m u^(m-1).
    """
    n = u0.shape[-1]
    dx = l_x / n
    m = int(m)
    out = _frames_shape(times, n)
    u, t = u0.astype(float), 0.0
    for i, t_next in enumerate(times):
        while t < t_next - 1e-14:
            diff = m * float(np.max(np.abs(u))) ** (m - 1)
            dt = min(0.35 * dx * dx / max(diff, 1e-12), t_next - t)
            w = u**m
            u = u + (dt / (dx * dx)) * (np.roll(w, -1) - 2.0 * w + np.roll(w, 1))
            t += dt
        t = t_next
        out[i] = u
    _check_finite(out, "porous medium")
    return out


# ---------------------------------------------------------------------------
# Pseudo-spectral solvers
# ---------------------------------------------------------------------------


def _wavenumbers(n: int, l_x: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, d=l_x / n)


def _dealias_mask(k: np.ndarray) -> np.ndarray:
    kmax = np.max(np.abs(k))
    return (np.abs(k) <= (2.0 / 3.0) * kmax).astype(float)


def solve_kdv(u0, times, l_x, q) -> np.ndarray:
    """u_t + q^2 u_xxx + u u_x = 0 by integrating-factor RK4 in Fourier space.

    The dispersive term is handled exactly by the integrating factor; the
    quadratic term is dealiased with the 2/3 rule.  On instability the step
    is halved and the solve restarted, up to the refinement cap.
    """
    n = u0.shape[-1]
    k = _wavenumbers(n, l_x)
    mask = _dealias_mask(k)
    lin = 1j * (q * q) * k**3  # from u_t = -q^2 u_xxx

    def nonlinear(vhat):
        u = np.real(np.fft.ifft(vhat))
        return -0.5j * k * mask * np.fft.fft(u * u)

    kmax_active = (2.0 / 3.0) * np.max(np.abs(k))
    for attempt in range(_MAX_REFINEMENTS + 1):
        cfl = 0.5 / (2.0**attempt)
        out = _frames_shape(times, n)
        vhat, t = np.fft.fft(u0.astype(float)), 0.0
        ok = True
        for i, t_next in enumerate(times):
            umax = max(float(np.max(np.abs(np.real(np.fft.ifft(vhat))))), 1e-6)
            dt_target = cfl / (kmax_active * umax)
            span = t_next - t
            n_sub = max(int(np.ceil(span / dt_target)), 1) if span > 0 else 0
            h = span / n_sub if n_sub else 0.0
            e_half = np.exp(lin * h / 2.0)
            e_full = e_half * e_half
            for _ in range(n_sub):
                a = h * nonlinear(vhat)
                b = h * nonlinear(e_half * (vhat + 0.5 * a))
                c = h * nonlinear(e_half * vhat + 0.5 * b)
                d = h * nonlinear(e_full * vhat + e_half * c)
                vhat = e_full * vhat + (e_full * a + 2.0 * e_half * (b + c) + d) / 6.0
            t = t_next
            out[i] = np.real(np.fft.ifft(vhat))
            if not np.all(np.isfinite(out[i])):
                ok = False
                break
        if ok:
            return out
    raise SolverError("kdv: unstable after maximum step refinement")


def solve_cahn_hilliard(u0, times, l_x, q, dt_target=1e-4) -> np.ndarray:
    """u_t + q^2 u_xxxx + 6 (u u_x)_x = 0 via stabilized semi-implicit stepping.

    The nonlinear term equals 3 (u^2)_xx and is anti-diffusive where u > 0, so
    a splitting constant S >= 6 max|u| is added to the implicit part:

        (1 + dt (q^2 k^4 + S k^2)) u^{n+1} = u^n + dt (3 k^2 (u^2)^ + S k^2 u^n)

    The k = 0 mode is untouched, so the discrete mean is conserved exactly.
    """
    n = u0.shape[-1]
    k = _wavenumbers(n, l_x)
    k2, k4 = k**2, k**4
    mask = _dealias_mask(k)
    for attempt in range(_MAX_REFINEMENTS + 1):
        dt_try = dt_target / (2.0**attempt)
        out = _frames_shape(times, n)
        vhat, t = np.fft.fft(u0.astype(float)), 0.0
        ok = True
        for i, t_next in enumerate(times):
            span = t_next - t
            n_sub = max(int(np.ceil(span / dt_try)), 1) if span > 0 else 0
            h = span / n_sub if n_sub else 0.0
            for _ in range(n_sub):
                u = np.real(np.fft.ifft(vhat))
                stab = 6.0 * float(np.max(np.abs(u))) + 1.0
                w = mask * np.fft.fft(u * u)
                denom = 1.0 + h * (q * q * k4 + stab * k2)
                vhat = (vhat + h * (3.0 * k2 * w + stab * k2 * vhat)) / denom
            t = t_next
            out[i] = np.real(np.fft.ifft(vhat))
            if not np.all(np.isfinite(out[i])):
                ok = False
                break
        if ok:
            return out
    raise SolverError("cahn-hilliard: unstable after maximum step refinement")


# ---------------------------------------------------------------------------
# Finite-volume conservation laws
# ---------------------------------------------------------------------------


def godunov_flux(flux, crit_points, a, b) -> np.ndarray:
    """Exact Godunov interface flux for a scalar conservation law.

    F(a, b) = min of f over [a, b] when a <= b, else max of f over [b, a].
    Interior extrema are handled by evaluating f at the supplied critical
    points of the flux that fall inside the interval.
    """
    fa, fb = flux(a), flux(b)
    fmin = np.minimum(fa, fb)
    fmax = np.maximum(fa, fb)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    for c in crit_points:
        inside = (lo < c) & (c < hi)
        if np.any(inside):
            fc = float(flux(np.asarray(c, dtype=float)))
            fmin = np.where(inside, np.minimum(fmin, fc), fmin)
            fmax = np.where(inside, np.maximum(fmax, fc), fmax)
    return np.where(a <= b, fmin, fmax)


def _minmod(a, b):
    return np.where(a * b > 0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _pad(u, bc):
    if bc == "periodic":
        return np.concatenate([u[-2:], u, u[:2]])
    if bc == "neumann":
        return np.concatenate([u[:1], u[:1], u, u[-1:], u[-1:]])
    raise SolverError(f"unknown boundary condition {bc!r}")


def _hyperbolic_rhs(u, dx, flux, dflux, crit_points, bc, order):
    """-(F_{j+1/2} - F_{j-1/2}) / dx with Godunov fluxes.

    order=1: piecewise-constant states.  order=2: MUSCL minmod reconstruction.
    """
    up = _pad(u, bc)
    if order >= 2:
        slopes = _minmod(up[1:-1] - up[:-2], up[2:] - up[1:-1])
        left = up[1:-1] + 0.5 * slopes  # state at the right face of each padded cell
        right = up[1:-1] - 0.5 * slopes  # state at the left face
    else:
        left = up[1:-1]
        right = up[1:-1]
    # interface i+1/2 between padded cells: left state from cell i, right from i+1
    fl = godunov_flux(flux, crit_points, left[:-1], right[1:])
    return -(fl[1:] - fl[:-1]) / dx


def _diffusion_step_spectral(u, nu, dt, l_x):
    k = _wavenumbers(u.shape[-1], l_x)
    return np.real(np.fft.ifft(np.fft.fft(u) * np.exp(-nu * k * k * dt)))


def _diffusion_step_cn(u, nu, dt, dx):
    """Crank-Nicolson heat step with homogeneous Neumann boundaries."""
    n = u.shape[-1]
    r = 0.5 * nu * dt / (dx * dx)
    # rhs: explicit half-step with reflecting ghosts
    up = np.concatenate([u[:1], u, u[-1:]])
    rhs = u + r * (up[2:] - 2.0 * u + up[:-2])
    ab = np.zeros((3, n))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[1, 0] = 1.0 + r
    ab[1, -1] = 1.0 + r
    ab[2, :-1] = -r
    return solve_banded((1, 1), ab, rhs)


def solve_conservation(u0, times, l_x, flux, dflux, crit_points=(), nu=0.0,
                       bc="periodic", order=2, cfl=0.45) -> np.ndarray:
    """Scalar conservation law u_t + f(u)_x = nu u_xx, Godunov finite volume.

    The hyperbolic update runs at the advective CFL limit with SSP-RK2 (or
    forward Euler for order=1); viscosity is Strang-split around it with an
    exact spectral heat step (periodic) or Crank-Nicolson (Neumann).  In flux
    form the discrete sum of u is conserved to roundoff under periodic BC.
    """
    n = u0.shape[-1]
    dx = l_x / n
    out = _frames_shape(times, n)
    u, t = u0.astype(float), 0.0

    def diffuse(v, h):
        if nu == 0.0 or h == 0.0:
            return v
        if bc == "periodic":
            return _diffusion_step_spectral(v, nu, h, l_x)
        return _diffusion_step_cn(v, nu, h, dx)

    for i, t_next in enumerate(times):
        while t < t_next - 1e-14:
            smax = max(float(np.max(np.abs(dflux(u)))), 1e-8)
            for c in crit_points:
                smax = max(smax, abs(float(dflux(np.asarray(c, dtype=float)))))
            dt = min(cfl * dx / smax, t_next - t)
            u = diffuse(u, 0.5 * dt)
            if order >= 2:
                k1 = _hyperbolic_rhs(u, dx, flux, dflux, crit_points, bc, order)
                mid = u + dt * k1
                k2 = _hyperbolic_rhs(mid, dx, flux, dflux, crit_points, bc, order)
                u = 0.5 * (u + mid + dt * k2)
            else:
                u = u + dt * _hyperbolic_rhs(u, dx, flux, dflux, crit_points, bc, order)
            u = diffuse(u, 0.5 * dt)
            t += dt
            if not np.all(np.isfinite(u)):
                raise SolverError("conservation law: solution became non-finite")
        t = t_next
        out[i] = u
    return out


# ---------------------------------------------------------------------------
# Reaction-diffusion (Strang split)
# ---------------------------------------------------------------------------


def solve_reaction_diffusion(u0, times, l_x, q, react_step) -> np.ndarray:
    """u_t = q u_xx + R(u) via Strang splitting R(h/2) D(h) R(h/2).

    ``react_step(u, h)`` advances the pointwise reaction ODE; the diffusion
    substep is FTCS, with h kept under the explicit stability limit.
    """
    n = u0.shape[-1]
    dx = l_x / n
    dt_stab = 0.4 * dx * dx / max(q, 1e-12)
    out = _frames_shape(times, n)
    u, t = u0.astype(float), 0.0
    for i, t_next in enumerate(times):
        span = t_next - t
        n_sub = max(int(np.ceil(span / dt_stab)), 1) if span > 0 else 0
        h = span / n_sub if n_sub else 0.0
        for _ in range(n_sub):
            u = react_step(u, 0.5 * h)
            u = u + q * h * _laplacian(u, dx)
            u = react_step(u, 0.5 * h)
        t = t_next
        out[i] = u
    _check_finite(out, "reaction-diffusion")
    return out


def react_rk4(rate):
    """Generic RK4 substep for a pointwise reaction law u' = rate(u)."""

    def step(u, h):
        if h == 0.0:
            return u
        k1 = rate(u)
        k2 = rate(u + 0.5 * h * k1)
        k3 = rate(u + 0.5 * h * k2)
        k4 = rate(u + h * k3)
        return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    return step


def react_linear(p):
    """Exact flow of u' = p u."""
    return lambda u, h: u * np.exp(p * h)


def react_logistic(p):
    """Exact flow of u' = p u (1 - u), stable on [0, 1]."""

    def step(u, h):
        if h == 0.0:
            return u
        g = np.exp(p * h)
        return u * g / (1.0 - u + u * g)

    return step


# ---------------------------------------------------------------------------
# Fokker-Planck drift-diffusion
# ---------------------------------------------------------------------------


def solve_fokker_planck(u0, times, l_x, diff_rate, drift_rate) -> np.ndarray:
    """u_t = a u_xx + b (sin(x) u)_x on [0, 2 pi) in conservative flux form.

    Interface fluxes J_{j+1/2} = a (u_{j+1} - u_j)/dx + b sin(x_{j+1/2})
    (u_j + u_{j+1})/2 telescope under periodic wrap, so the discrete sum
    (probability mass) is conserved to roundoff.
    """
    n = u0.shape[-1]
    dx = l_x / n
    s_half = np.sin((np.arange(n) + 0.5) * dx)  # drift coefficient at interfaces
    a, b = diff_rate, drift_rate
    dt_stab = 0.25 * dx * dx / a
    out = _frames_shape(times, n)
    u, t = u0.astype(float), 0.0
    for i, t_next in enumerate(times):
        span = t_next - t
        n_sub = max(int(np.ceil(span / dt_stab)), 1) if span > 0 else 0
        h = span / n_sub if n_sub else 0.0
        for _ in range(n_sub):
            u_next = np.roll(u, -1)
            j_half = a * (u_next - u) / dx + b * s_half * 0.5 * (u + u_next)
            u = u + (h / dx) * (j_half - np.roll(j_half, 1))
        t = t_next
        out[i] = u
    _check_finite(out, "fokker-planck")
    return out
