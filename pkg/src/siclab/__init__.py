"""Search, verification and classification of Weyl-Heisenberg SIC-POVM fiducials."""

from .analysis import (
    census,
    count_sics,
    orbits_equivalent,
    realness_check,
    stabilizer,
    state_inversion_check,
    tdesign_defect,
    triple_fingerprint,
    verify_sic,
    zauner_class,
)
from .clifford import (
    CliffordElement,
    Subspace,
    SymplecticIndex,
    clifford_element,
    group_orders,
    named_symmetry,
    zauner_eigenspace,
    zauner_matrix,
)
from .schmidt import schmidt_coefficients
from .search import SearchConfig, restrict_to_symmetry, run_search, sic_cost, welch_bound
from .whgroup import DimensionContext, displacement, make_context, overlap_table

__version__ = "0.1.0"
