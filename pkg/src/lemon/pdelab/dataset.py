"""Trajectory dataset sampling and its on-disk container.

Sampling follows a two-level scheme per family: draw ``n_q`` operators from
the family's parameter distribution, then ``n_u`` initial conditions per
operator, solving each to the grid's frame times.  Every record carries the
operator's prefix symbol encoding with its numeric parameters embedded.

The container is three sibling files: ``<base>.manifest`` (INI text with the
grid, per-family counts, parameter values, and blob offsets), ``<base>.bin``
(contiguous little-endian float32 frames in manifest order), and
``<base>.sym`` (one prefix token line per operator).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError, DomainError, SolverError
from ..exprtree import SymbolSequence, to_polish
from .families import PDEFamily, family_ordinal, family_to_tree, get_family
from .grid import Grid
from .ic import ICSpec

FORMAT_VERSION = 1
SOLVE_RETRY_CAP = 5  # resamples of a failed IC draw before giving up


@dataclass(frozen=True)
class IOFP:
    """One input/output function pair for one concrete operator."""

    family_id: str
    q: tuple[float, ...]
    input: np.ndarray   # [n_t_in, n_x] float32
    output: np.ndarray  # [n_t_out, n_x] float32
    symbols: SymbolSequence


@dataclass
class FamilyBlock:
    """All trajectories sampled from one family, grouped by operator."""

    family_id: str
    l_x: float
    t_final: float
    boundary: str
    q_values: list[tuple[float, ...]]
    symbols: list[SymbolSequence]
    inputs: np.ndarray   # [n_ops, n_ic, n_t_in, n_x] float32
    outputs: np.ndarray  # [n_ops, n_ic, n_t_out, n_x] float32

    @property
    def n_operators(self) -> int:
        return len(self.q_values)

    @property
    def n_ic(self) -> int:
        return self.inputs.shape[1]

    def iofps(self) -> list[IOFP]:
        out = []
        for i in range(self.n_operators):
            for j in range(self.n_ic):
                out.append(IOFP(self.family_id, self.q_values[i],
                                self.inputs[i, j], self.outputs[i, j], self.symbols[i]))
        return out


@dataclass
class Dataset:
    grid: Grid
    seed: int
    blocks: list[FamilyBlock] = field(default_factory=list)

    def __len__(self):
        return sum(b.n_operators * b.n_ic for b in self.blocks)

    def iofps(self) -> list[IOFP]:
        out = []
        for b in self.blocks:
            out.extend(b.iofps())
        return out

    def family_ids(self) -> list[str]:
        return [b.family_id for b in self.blocks]


def _family_rng(seed: int, fid: str, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(family_ordinal(fid), salt))
    )


def _solve_frames(family: PDEFamily, q, u0, grid: Grid, bc=None):
    times = grid.all_times
    if bc is not None:
        frames = family.solve(u0, times, grid.l_x, q, bc)
    else:
        frames = family.solve(u0, times, grid.l_x, q)
    n_in = grid.n_t_in
    return (frames[:n_in].astype(np.float32), frames[n_in:].astype(np.float32))


def sample_operator_ics(family: PDEFamily, q, n_u: int, grid: Grid,
                        rng: np.random.Generator):
    """Draw and solve n_u initial conditions for one operator, with retries."""
    fam_grid = family.domain_grid(grid)
    inputs = np.empty((n_u, grid.n_t_in, grid.n_x), dtype=np.float32)
    outputs = np.empty((n_u, grid.n_t_out, grid.n_x), dtype=np.float32)
    for j in range(n_u):
        last_err = None
        for _ in range(SOLVE_RETRY_CAP):
            u0 = family.sample_ic(rng, fam_grid)
            try:
                inputs[j], outputs[j] = _solve_frames(family, q, u0, fam_grid)
                last_err = None
                break
            except SolverError as err:
                last_err = err
        if last_err is not None:
            raise SolverError(
                f"{family.id}: {SOLVE_RETRY_CAP} consecutive solve failures "
                f"for q={q}: {last_err}"
            )
    return inputs, outputs


def sample_family_block(family: PDEFamily, n_q: int, n_u: int, grid: Grid, seed: int,
                        q_values=None) -> FamilyBlock:
    """Sample ``n_q`` operators x ``n_u`` ICs from one family.

    ``q_values`` fixes the operator parameters explicitly (used by zero-shot
    protocols that need controlled parameter sets); otherwise they are drawn
    from the family's distribution.
    """
    if n_u < 1 or (q_values is None and n_q < 1):
        raise DomainError("n_q and n_u must be >= 1")
    rng = _family_rng(seed, family.id)
    if q_values is None:
        q_values = [family.sample_params(rng) for _ in range(n_q)]
    else:
        q_values = [tuple(float(v) for v in np.atleast_1d(q)) for q in q_values]
    fam_grid = family.domain_grid(grid)
    symbols = [to_polish(family_to_tree(family, q)) for q in q_values]
    inputs = np.empty((len(q_values), n_u, grid.n_t_in, grid.n_x), dtype=np.float32)
    outputs = np.empty((len(q_values), n_u, grid.n_t_out, grid.n_x), dtype=np.float32)
    for i, q in enumerate(q_values):
        inputs[i], outputs[i] = sample_operator_ics(family, q, n_u, grid, rng)
    return FamilyBlock(family.id, fam_grid.l_x, fam_grid.t_final, family.boundary,
                       q_values, symbols, inputs, outputs)


def sample_dataset(family_ids, n_q: int, n_u: int, grid: Grid, seed: int) -> Dataset:
    """Mixed dataset over several families; deterministic in (seed, ids, counts)."""
    if isinstance(family_ids, str):
        family_ids = [family_ids]
    blocks = [sample_family_block(get_family(fid), n_q, n_u, grid, seed)
              for fid in family_ids]
    return Dataset(grid=grid, seed=seed, blocks=blocks)


# ---------------------------------------------------------------------------
# Riemann problems
# ---------------------------------------------------------------------------


def classify_riemann(family: PDEFamily, left: float, right: float) -> str:
    """Lax classification for a scalar flux: shock iff f'(uL) > f'(uR)."""
    if family.dflux is None:
        raise DomainError(f"family {family.id} has no flux; cannot pose Riemann data")
    sl = float(family.dflux(np.asarray(left, dtype=float)))
    sr = float(family.dflux(np.asarray(right, dtype=float)))
    return "shock" if sl > sr else "rarefaction"


def riemann_dataset(family: PDEFamily, kind: str, n: int, grid: Grid, seed: int) -> Dataset:
    """n Riemann-problem IOFPs of the requested wave type (shock/rarefaction).

    Left/right states are drawn uniformly from [0, 1] and rejected until the
    Lax condition matches ``kind``; solves use homogeneous Neumann boundaries.
    """
    if kind not in ("shock", "rarefaction"):
        raise DomainError(f"riemann kind must be 'shock' or 'rarefaction', got {kind!r}")
    if family.flux is None:
        raise DomainError(f"family {family.id} has no flux; cannot pose Riemann data")
    rng = _family_rng(seed, family.id, salt=1)
    fam_grid = family.domain_grid(grid)
    q_values, symbols = [], []
    inputs = np.empty((n, 1, grid.n_t_in, grid.n_x), dtype=np.float32)
    outputs = np.empty((n, 1, grid.n_t_out, grid.n_x), dtype=np.float32)
    for i in range(n):
        q = family.sample_params(rng)
        while True:
            left, right = rng.uniform(0.0, 1.0, size=2)
            if abs(left - right) < 1e-3:
                continue
            if classify_riemann(family, left, right) == kind:
                break
        spec = ICSpec(kind="riemann", left=float(left), right=float(right))
        u0 = family.realize_ic(spec, fam_grid)
        inputs[i], outputs[i] = _solve_frames(family, q, u0, fam_grid, bc="neumann")
        q_values.append(q)
        symbols.append(to_polish(family_to_tree(family, q)))
    block = FamilyBlock(family.id, fam_grid.l_x, fam_grid.t_final, "neumann",
                        q_values, symbols, inputs, outputs)
    return Dataset(grid=grid, seed=seed, blocks=[block])


# ---------------------------------------------------------------------------
# Container IO
# ---------------------------------------------------------------------------


def write_dataset(ds: Dataset, base_path) -> None:
    base = Path(base_path)
    cfg = configparser.ConfigParser()
    cfg["dataset"] = {
        "version": str(FORMAT_VERSION),
        "seed": str(ds.seed),
        "n_families": str(len(ds.blocks)),
        "dtype": "float32-le",
    }
    g = ds.grid
    cfg["grid"] = {
        "n_x": str(g.n_x), "l_x": repr(g.l_x),
        "n_t_in": str(g.n_t_in), "n_t_out": str(g.n_t_out),
        "t_final": repr(g.t_final), "input_fraction": repr(g.input_fraction),
    }
    offset = 0
    sym_lines = []
    for bi, block in enumerate(ds.blocks):
        sec = f"family {bi}"
        cfg[sec] = {
            "id": block.family_id,
            "l_x": repr(block.l_x),
            "t_final": repr(block.t_final),
            "boundary": block.boundary,
            "n_operators": str(block.n_operators),
            "n_ic": str(block.n_ic),
            "offset": str(offset),
        }
        for i, q in enumerate(block.q_values):
            cfg[sec][f"q_{i}"] = ",".join(repr(float(v)) for v in q)
        offset += block.inputs.size + block.outputs.size
        sym_lines.extend(s.text() for s in block.symbols)
    cfg["dataset"]["total_elements"] = str(offset)

    with open(base.with_suffix(".manifest"), "w") as fh:
        cfg.write(fh)
    if ds.blocks:
        with open(base.with_suffix(".bin"), "wb") as fh:
            for block in ds.blocks:
                fh.write(np.ascontiguousarray(block.inputs, dtype="<f4").tobytes())
                fh.write(np.ascontiguousarray(block.outputs, dtype="<f4").tobytes())
        base.with_suffix(".sym").write_text("\n".join(sym_lines) + "\n")


def read_dataset(base_path) -> Dataset:
    base = Path(base_path)
    manifest = base.with_suffix(".manifest")
    if not manifest.exists():
        raise DataError(f"missing manifest {manifest}")
    cfg = configparser.ConfigParser()
    cfg.read(manifest)
    try:
        version = cfg.getint("dataset", "version")
        if version != FORMAT_VERSION:
            raise DataError(f"unsupported dataset version {version}")
        seed = cfg.getint("dataset", "seed")
        n_fam = cfg.getint("dataset", "n_families")
        total = cfg.getint("dataset", "total_elements")
        grid = Grid(
            n_x=cfg.getint("grid", "n_x"), l_x=cfg.getfloat("grid", "l_x"),
            n_t_in=cfg.getint("grid", "n_t_in"), n_t_out=cfg.getint("grid", "n_t_out"),
            t_final=cfg.getfloat("grid", "t_final"),
            input_fraction=cfg.getfloat("grid", "input_fraction"),
        )
    except (configparser.Error, ValueError) as err:
        raise DataError(f"malformed manifest: {err}") from err

    ds = Dataset(grid=grid, seed=seed)
    if n_fam == 0:
        if total != 0:
            raise DataError("empty dataset manifest declares nonzero payload")
        return ds

    blob_path = base.with_suffix(".bin")
    sym_path = base.with_suffix(".sym")
    if not blob_path.exists() or not sym_path.exists():
        raise DataError("manifest declares payload but .bin/.sym files are missing")
    blob = np.frombuffer(blob_path.read_bytes(), dtype="<f4")
    if blob.size != total:
        raise DataError(f"blob holds {blob.size} elements, manifest says {total}")
    sym_lines = sym_path.read_text().splitlines()

    sym_cursor = 0
    expected_offset = 0
    for bi in range(n_fam):
        sec = f"family {bi}"
        try:
            fid = cfg.get(sec, "id")
            n_ops = cfg.getint(sec, "n_operators")
            n_ic = cfg.getint(sec, "n_ic")
            offset = cfg.getint(sec, "offset")
            l_x = cfg.getfloat(sec, "l_x")
            t_final = cfg.getfloat(sec, "t_final")
            boundary = cfg.get(sec, "boundary")
            q_values = [tuple(float(v) for v in cfg.get(sec, f"q_{i}").split(","))
                        for i in range(n_ops)]
        except (configparser.Error, ValueError) as err:
            raise DataError(f"malformed family section {sec!r}: {err}") from err
        if offset != expected_offset:
            raise DataError(
                f"family {fid}: blob offset {offset} does not match expected "
                f"{expected_offset} (overlapping or gapped blocks)"
            )
        in_size = n_ops * n_ic * grid.n_t_in * grid.n_x
        out_size = n_ops * n_ic * grid.n_t_out * grid.n_x
        if offset + in_size + out_size > blob.size:
            raise DataError(f"family {fid}: blob truncated")
        inputs = blob[offset:offset + in_size].reshape(n_ops, n_ic, grid.n_t_in, grid.n_x)
        outputs = blob[offset + in_size:offset + in_size + out_size].reshape(
            n_ops, n_ic, grid.n_t_out, grid.n_x)
        expected_offset = offset + in_size + out_size
        if sym_cursor + n_ops > len(sym_lines):
            raise DataError(f"family {fid}: .sym file has too few lines")
        symbols = [SymbolSequence.from_text(line)
                   for line in sym_lines[sym_cursor:sym_cursor + n_ops]]
        sym_cursor += n_ops
        ds.blocks.append(FamilyBlock(fid, l_x, t_final, boundary, q_values, symbols,
                                     inputs.copy(), outputs.copy()))
    if expected_offset != total:
        raise DataError("family blocks do not cover the declared payload")
    return ds
