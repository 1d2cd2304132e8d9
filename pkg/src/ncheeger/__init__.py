"""Grid-based solver for Cheeger constants and optimal N-partitions of
planar domains, with rigorous bound brackets, interface structure checks,
and Dirichlet eigenvalue cross-checks."""

from .errors import (
    ChamberVanished,
    EmptyDomain,
    MaxIterExceeded,
    NCheegerError,
    NonConvergence,
    NonMonotoneInput,
    NotConvex,
    OverlapError,
    TooFewPixels,
    TooShort,
)
from .grid import (
    OUTSIDE,
    STENCIL,
    Difference,
    Disk,
    DomainMask,
    GridSpec,
    Intersection,
    Labeling,
    NeighborStencil,
    Rect,
    RegularPolygon,
    ShapeExpr,
    Union,
    area,
    boundary_pair_counts,
    compactly_contained,
    components,
    interface_weight,
    perimeter,
    rasterize,
    union_perimeter_identity,
    validate_labeling,
)
from .maxflow import CutResult, FlowNetwork, min_cut
from .single import (
    CheegerResult,
    SolverTolerances,
    cheeger_solve,
    inner_cheeger_convex,
    ratio_subproblem,
)
from .cluster import (
    ChamberStats,
    CheckResult,
    ClusterConfig,
    ClusterResult,
    SeedStrategy,
    ValidationReport,
    compute_stats,
    seed,
    solve,
    split_largest_chamber,
    validate,
)
from .bounds import (
    BoundReport,
    HexPlacement,
    bound_report,
    bracket_sweep,
    chamber_area_bound,
    hex_upper_bound,
    lower_bound,
)
from .structure import (
    ArcFit,
    InterfacePolyline,
    StructureReport,
    TriplePoint,
    expected_curvature,
    extract_interfaces,
    fit_arc,
    structure_report,
    triple_points,
)
from .spectral import (
    ChainReport,
    EigCheck,
    EigResult,
    cheeger_eig_check,
    lambda1,
    partition_chain_check,
)

__version__ = "0.1.0"
