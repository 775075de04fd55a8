"""Registry of parametric PDE families.

Each family bundles a symbolic residual template (with numeric parameters
substituted), a parameter sampling rule, an initial-condition policy, and a
solver binding.  Derivative symbols are atomic leaves, so flux and nonlinear
derivative terms appear in chain-rule-expanded form, e.g. Burgers'
``q (u^2/2)_x`` is encoded as ``q * u * u_x``.

Conventions chosen here (the underlying definitions do not pin them down):
the spatial domain is [0, 1) with T = 1 unless noted; parameters q are drawn
uniformly from [0.5 q_c, 1.5 q_c] per scalar; the porous-medium order m is
drawn uniformly from {2, 3, 4}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import exprtree as et
from ..errors import DomainError, StructuralError
from . import solvers
from .grid import Grid
from .ic import ICSpec, ic_gaussian, ic_riemann, ic_sine, normalize, periodize, sample_ic_spec

U, U_T, U_TT = et.leaf("u"), et.leaf("u_t"), et.leaf("u_tt")
U_X, U_XX, U_XXX, U_XXXX = et.leaf("u_x"), et.leaf("u_xx"), et.leaf("u_xxx"), et.leaf("u_xxxx")
X = et.leaf("x")

# Fokker-Planck physical constants.  With potential U(x) = U0 cos(s x),
# s = 1e7, drag gamma = 6 pi 1e-7 q and Einstein relation D = 300 k_B / gamma,
# rescaling y = s x onto one period [0, 2 pi) gives
#     u_t = a u_yy + b (sin(y) u)_y,
# a = s^2 D ~ 0.2197 / q and b = s^2 U0 / gamma ~ 0.2653 / q.  The ratio
# b / a = U0 / (300 k_B) ~ 1.207 is the equilibrium Boltzmann exponent and is
# independent of q.
BOLTZMANN_K = 1.380649e-23
FP_POTENTIAL_AMPLITUDE = 5e-21
FP_WAVENUMBER = 1e7
FP_DRAG_COEFF = 6.0 * math.pi * 1e-7


def fp_rates(q: float) -> tuple[float, float]:
    """Nondimensional (diffusion, drift) rates a = s^2 D, b = s^2 U0 / gamma.

    At q = 1e-3 this gives a ~ 2.2e2, so the density relaxes to its Boltzmann
    equilibrium exp((b/a) cos y) on a ~5e-3 time scale; the family horizon is
    set to 0.01 to keep visible dynamics in the frames.
    """
    gamma = FP_DRAG_COEFF * q
    scale = FP_WAVENUMBER**2
    a = scale * 300.0 * BOLTZMANN_K / gamma
    b = scale * FP_POTENTIAL_AMPLITUDE / gamma
    return a, b


@dataclass(frozen=True)
class PDEFamily:
    """One parametric operator family and everything needed to sample it."""

    id: str
    name: str
    q_canonical: tuple[float, ...]
    expression: Callable[[tuple], et.ExprNode]
    solve: Callable[[np.ndarray, np.ndarray, float, tuple], np.ndarray]
    sample_params: Callable[[np.random.Generator], tuple]
    ic_kind: str = "sine"
    ic_postops: bool = True
    ic_periodize: bool = False
    ic_normalize: tuple[str, ...] = ()
    boundary: str = "periodic"
    l_x: float | None = None       # override of the dataset grid domain length
    t_final: float | None = None   # override of the dataset grid horizon
    flux: Callable | None = None   # base flux f(u) (q multiplies it)
    dflux: Callable | None = None
    flux_crits: tuple[float, ...] = ()
    viscosity: Callable[[tuple], float] | None = None

    @property
    def n_params(self) -> int:
        return len(self.q_canonical)

    def domain_grid(self, grid: Grid) -> Grid:
        return grid.with_domain(self.l_x, self.t_final)

    def sample_ic(self, rng: np.random.Generator, grid: Grid) -> np.ndarray:
        spec = sample_ic_spec(self.ic_kind, rng, allow_postops=self.ic_postops, l_x=grid.l_x)
        return self.realize_ic(spec, grid)

    def realize_ic(self, spec: ICSpec, grid: Grid) -> np.ndarray:
        if spec.kind == "sine":
            u0 = ic_sine(spec, grid)
        elif spec.kind == "gaussian":
            u0 = ic_gaussian(spec, grid)
        elif spec.kind == "riemann":
            u0 = ic_riemann(spec, grid)
        else:
            raise DomainError(f"unknown IC kind {spec.kind!r}")
        if self.ic_periodize and spec.kind != "riemann":
            u0 = periodize(u0)
        for mode in self.ic_normalize:
            u0 = normalize(u0, mode)
        return u0


def family_to_tree(family: PDEFamily, q) -> et.ExprNode:
    """Instantiate a family template with numeric parameters substituted."""
    q = tuple(float(v) for v in np.atleast_1d(q))
    if len(q) != family.n_params:
        raise StructuralError(
            f"family {family.id} expects {family.n_params} parameters, got {len(q)}"
        )
    return family.expression(q)


def _uniform_around(canonical: tuple[float, ...]):
    def sample(rng: np.random.Generator) -> tuple:
        return tuple(rng.uniform(0.5 * c, 1.5 * c) for c in canonical)

    return sample


def _pm_sample(rng: np.random.Generator) -> tuple:
    return (float(rng.integers(2, 5)),)


# --- residual templates (all written as LHS of "= 0") ----------------------


def _ad_expr(q):
    return et.add(U_T, et.mul(q[0], U_X))


def _pm_expr(q):
    m = int(q[0])
    if m not in (2, 3, 4):
        raise DomainError(f"porous-medium order must be 2, 3 or 4, got {q[0]}")
    # (u^m)_xx expanded: m(m-1) u^(m-2) u_x^2 + m u^(m-1) u_xx
    grad_term = et.mul(m * (m - 1), et.mul(et.pow_(U, m - 2), et.mul(U_X, U_X)))
    lap_term = et.mul(m, et.mul(et.pow_(U, m - 1), U_XX))
    return et.sub(U_T, et.add(grad_term, lap_term))


def _kdv_expr(q):
    return et.add(et.add(U_T, et.mul(q[0] ** 2, U_XXX)), et.mul(U, U_X))


def _df_expr(q):
    return et.sub(U_T, et.mul(q[0], U_XX))


def _wv_expr(q):
    return et.sub(U_TT, et.mul(q[0], U_XX))


def _sg_expr(q):
    return et.sub(et.add(U_TT, et.mul(q[0], et.sin(U))), U_XX)


def _kg_expr(q):
    qv, p = q
    return et.sub(et.add(U_TT, et.mul(p**2 * qv**4, U)), et.mul(qv**2, U_XX))


def _ch_expr(q):
    # u_t + q^2 u_xxxx + 6 (u u_x)_x, with 6 (u u_x)_x = 6 u_x^2 + 6 u u_xx
    nonlin = et.add(et.mul(6.0, et.mul(U_X, U_X)), et.mul(6.0, et.mul(U, U_XX)))
    return et.add(et.add(U_T, et.mul(q[0] ** 2, U_XXXX)), nonlin)


def _dl_expr(q):
    return et.sub(et.sub(U_T, et.mul(q[0], U_XX)), et.mul(q[1], U))


def _dlo_expr(q):
    reaction = et.mul(q[1], et.mul(U, et.sub(1.0, U)))
    return et.sub(et.sub(U_T, et.mul(q[0], U_XX)), reaction)


def _ds_expr(q):
    reaction = et.mul(q[1], et.mul(et.pow_(U, 2), et.pow_(et.sub(1.0, U), 2)))
    return et.sub(et.sub(U_T, et.mul(q[0], U_XX)), reaction)


def _dbi_expr(q):
    reaction = et.mul(q[1], et.mul(et.pow_(U, 2), et.sub(1.0, U)))
    return et.sub(et.sub(U_T, et.mul(q[0], U_XX)), reaction)


def _viscous(expr_advective):
    def expr(q):
        return et.sub(expr_advective(q), et.mul(q[1] / math.pi, U_XX))

    return expr


def _sinf_adv(q):
    # q (sin u)_x = q cos(u) u_x
    return et.add(U_T, et.mul(q[0], et.mul(et.cos(U), U_X)))


def _cosf_adv(q):
    # q (cos u)_x = -q sin(u) u_x
    return et.sub(U_T, et.mul(q[0], et.mul(et.sin(U), U_X)))


def _cubic_adv(q):
    # q (u^3/3)_x = q u^2 u_x
    return et.add(U_T, et.mul(q[0], et.mul(et.mul(U, U), U_X)))


def _burgers_adv(q):
    # q (u^2/2)_x = q u u_x
    return et.add(U_T, et.mul(q[0], et.mul(U, U_X)))


def _fp_expr(q):
    a, b = fp_rates(q[0])
    drift = et.add(et.mul(b, et.mul(et.cos(X), U)), et.mul(b, et.mul(et.sin(X), U_X)))
    return et.sub(et.sub(U_T, et.mul(a, U_XX)), drift)


# --- solver bindings --------------------------------------------------------


def _solve_ad(u0, times, l_x, q):
    return solvers.solve_advection(u0, times, l_x, speed=q[0])


def _solve_wv(u0, times, l_x, q):
    return solvers.solve_wave_dalembert(u0, times, l_x, q[0])


def _solve_df(u0, times, l_x, q):
    return solvers.solve_heat_mol(u0, times, l_x, q[0])


def _solve_pm(u0, times, l_x, q):
    return solvers.solve_porous_medium(u0, times, l_x, int(q[0]))


def _solve_kdv(u0, times, l_x, q):
    return solvers.solve_kdv(u0, times, l_x, q[0])


def _solve_ch(u0, times, l_x, q):
    return solvers.solve_cahn_hilliard(u0, times, l_x, q[0])


def _solve_sg(u0, times, l_x, q):
    return solvers.solve_sine_gordon(u0, times, l_x, q[0])


def _solve_kg(u0, times, l_x, q):
    return solvers.solve_klein_gordon(u0, times, l_x, q[0], q[1])


def _solve_fp(u0, times, l_x, q):
    a, b = fp_rates(q[0])
    return solvers.solve_fokker_planck(u0, times, l_x, a, b)


def _reaction_solver(make_step):
    def solve(u0, times, l_x, q):
        return solvers.solve_reaction_diffusion(u0, times, l_x, q[0], make_step(q[1]))

    return solve


def _conservation_solver(base_flux, base_dflux, crits, viscous, bc="periodic"):
    def solve(u0, times, l_x, q, bc_override=None):
        qv = q[0]
        nu = q[1] / math.pi if viscous else 0.0
        return solvers.solve_conservation(
            u0, times, l_x,
            flux=lambda u: qv * base_flux(u),
            dflux=lambda u: qv * base_dflux(u),
            crit_points=crits, nu=nu, bc=bc_override or bc,
        )

    return solve


_FLUXES = {
    "burgers": (lambda u: 0.5 * u * u, lambda u: u, (0.0,)),
    "cubic": (lambda u: u**3 / 3.0, lambda u: u * u, (0.0,)),
    "sine": (np.sin, np.cos, (-0.5 * math.pi, 0.5 * math.pi, 1.5 * math.pi)),
    "cosine": (np.cos, lambda u: -np.sin(u), (-math.pi, 0.0, math.pi)),
}


def _conservation_family(fid, name, flux_name, viscous, adv_expr):
    base_flux, base_dflux, crits = _FLUXES[flux_name]
    q_c = (1.0, 0.01) if viscous else (1.0,)
    return PDEFamily(
        id=fid, name=name, q_canonical=q_c,
        expression=_viscous(adv_expr) if viscous else adv_expr,
        solve=_conservation_solver(base_flux, base_dflux, crits, viscous),
        sample_params=_uniform_around(q_c),
        ic_kind="sine", ic_postops=True, ic_normalize=("range",),
        flux=base_flux, dflux=base_dflux, flux_crits=crits,
        viscosity=(lambda q: q[1] / math.pi) if viscous else (lambda q: 0.0),
    )


def _build_registry() -> dict[str, PDEFamily]:
    fams = [
        PDEFamily(id="AD", name="advection", q_canonical=(0.5,), expression=_ad_expr,
                  solve=_solve_ad, sample_params=_uniform_around((0.5,)),
                  ic_kind="sine", ic_postops=False),
        PDEFamily(id="PM", name="porous medium", q_canonical=(2.0,), expression=_pm_expr,
                  solve=_solve_pm, sample_params=_pm_sample,
                  ic_kind="gaussian", ic_postops=False, ic_periodize=True,
                  ic_normalize=("range",)),
        PDEFamily(id="KdV", name="korteweg-de vries", q_canonical=(0.022,), expression=_kdv_expr,
                  solve=_solve_kdv, sample_params=_uniform_around((0.022,))),
        PDEFamily(id="DF", name="diffusion", q_canonical=(3e-3,), expression=_df_expr,
                  solve=_solve_df, sample_params=_uniform_around((3e-3,))),
        PDEFamily(id="WV", name="wave", q_canonical=(0.5,), expression=_wv_expr,
                  solve=_solve_wv, sample_params=_uniform_around((0.5,)),
                  ic_kind="sine", ic_postops=False),
        PDEFamily(id="SG", name="sine-gordon", q_canonical=(1.0,), expression=_sg_expr,
                  solve=_solve_sg, sample_params=_uniform_around((1.0,))),
        PDEFamily(id="KG", name="klein-gordon", q_canonical=(1.0, 0.1), expression=_kg_expr,
                  solve=_solve_kg, sample_params=_uniform_around((1.0, 0.1))),
        PDEFamily(id="CH", name="cahn-hilliard", q_canonical=(0.01,), expression=_ch_expr,
                  solve=_solve_ch, sample_params=_uniform_around((0.01,)),
                  t_final=0.05),
        PDEFamily(id="DL", name="diffusion linear reaction", q_canonical=(3e-3, 0.1),
                  expression=_dl_expr, solve=_reaction_solver(solvers.react_linear),
                  sample_params=_uniform_around((3e-3, 0.1)),
                  ic_normalize=("range",)),
        PDEFamily(id="DLo", name="diffusion logistic reaction", q_canonical=(3e-3, 1.0),
                  expression=_dlo_expr, solve=_reaction_solver(solvers.react_logistic),
                  sample_params=_uniform_around((3e-3, 1.0)),
                  ic_normalize=("range",)),
        PDEFamily(id="DS", name="diffusion square-logistic reaction", q_canonical=(3e-3, 1.0),
                  expression=_ds_expr,
                  solve=_reaction_solver(
                      lambda p: solvers.react_rk4(lambda u: p * u**2 * (1.0 - u) ** 2)),
                  sample_params=_uniform_around((3e-3, 1.0)),
                  ic_normalize=("range",)),
        PDEFamily(id="DBi", name="diffusion bistable reaction", q_canonical=(3e-3, 1.0),
                  expression=_dbi_expr,
                  solve=_reaction_solver(
                      lambda p: solvers.react_rk4(lambda u: p * u**2 * (1.0 - u))),
                  sample_params=_uniform_around((3e-3, 1.0)),
                  ic_normalize=("range",)),
        _conservation_family("SinF", "conservation, sine flux", "sine", True, _sinf_adv),
        _conservation_family("InSin", "inviscid conservation, sine flux", "sine", False, _sinf_adv),
        _conservation_family("Cos", "conservation, cosine flux", "cosine", True, _cosf_adv),
        _conservation_family("InCos", "inviscid conservation, cosine flux", "cosine", False, _cosf_adv),
        _conservation_family("CC", "conservation, cubic flux", "cubic", True, _cubic_adv),
        _conservation_family("InCub", "inviscid conservation, cubic flux", "cubic", False, _cubic_adv),
        _conservation_family("B", "viscous burgers", "burgers", True, _burgers_adv),
        _conservation_family("InB", "inviscid burgers", "burgers", False, _burgers_adv),
        PDEFamily(id="FP", name="fokker-planck", q_canonical=(1e-3,), expression=_fp_expr,
                  solve=_solve_fp, sample_params=_uniform_around((1e-3,)),
                  ic_kind="gaussian", ic_postops=False, ic_periodize=True,
                  ic_normalize=("range", "prob"), l_x=2.0 * math.pi, t_final=0.01),
    ]
    return {f.id: f for f in fams}


REGISTRY: dict[str, PDEFamily] = _build_registry()
FAMILY_IDS: tuple[str, ...] = tuple(REGISTRY)
_FAMILY_ORDINAL = {fid: i for i, fid in enumerate(FAMILY_IDS)}


def get_family(fid: str) -> PDEFamily:
    if fid not in REGISTRY:
        raise DomainError(f"unknown family {fid!r}; known: {', '.join(FAMILY_IDS)}")
    return REGISTRY[fid]


def family_ordinal(fid: str) -> int:
    """Stable per-family integer used to derive deterministic seed streams."""
    return _FAMILY_ORDINAL[get_family(fid).id]


def registry_symbols() -> set[str]:
    """All non-constant tokens appearing in any family template."""
    symbols: set[str] = set()
    for fam in REGISTRY.values():
        seq = et.to_polish(family_to_tree(fam, fam.q_canonical))
        symbols.update(tok for tok in seq if tok not in et.CONSTANT_TOKENS)
    return symbols


def registry_vocabulary() -> et.Vocabulary:
    return et.Vocabulary.build(registry_symbols())
