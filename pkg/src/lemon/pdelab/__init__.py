"""PDE family registry, initial conditions, solvers, and dataset sampling."""

from .dataset import (
    IOFP,
    Dataset,
    FamilyBlock,
    classify_riemann,
    read_dataset,
    riemann_dataset,
    sample_dataset,
    sample_family_block,
    write_dataset,
)
from .families import (
    FAMILY_IDS,
    REGISTRY,
    PDEFamily,
    family_to_tree,
    fp_rates,
    get_family,
    registry_symbols,
    registry_vocabulary,
)
from .grid import Grid
from .ic import (
    ICSpec,
    ic_gaussian,
    ic_riemann,
    ic_sine,
    normalize,
    periodize,
    sample_ic_spec,
    window_bump,
)

__all__ = [
    "IOFP", "Dataset", "FamilyBlock", "Grid", "ICSpec", "PDEFamily",
    "FAMILY_IDS", "REGISTRY",
    "classify_riemann", "family_to_tree", "fp_rates", "get_family",
    "ic_gaussian", "ic_riemann", "ic_sine", "normalize", "periodize",
    "read_dataset", "registry_symbols", "registry_vocabulary",
    "riemann_dataset", "sample_dataset", "sample_family_block",
    "sample_ic_spec", "window_bump", "write_dataset",
]
