"""Growth, boundary, and complement measurements for first-passage balls on Z^d."""

__version__ = "0.1.0"

from .lattice import Annulus, Edge, LatticeBox, encloses_origin, neighbors, star_neighbors
from .weights import (
    EdgeWeightField,
    RatioBound,
    YStatistic,
    bound_ratio,
    containment_constant,
    parse_model,
    seed_stream,
)
from .growth import (
    GuardError,
    PassageField,
    bellman_ford_reference,
    compute_passage,
    compute_passage_dense,
    load_passage,
    passage_at_real_point,
    require_containment,
)
from .boundary import (
    BoundaryTimeline,
    boundary_count_at,
    boundary_timeline,
    decompose_complement,
    edge_boundary_at,
    exterior_boundary_at,
    exterior_counts_at,
    hole_census_at,
    rough_time_density,
)
from .contours import (
    Contour,
    bad_contour_rate,
    enclosing_contour_count,
    exterior_is_star_connected,
    is_alpha_bad,
    star_animal_counts,
    star_contour_bound,
)
from .percolation import (
    HoleCandidateSpec,
    chemical_distance,
    count_hole_candidates,
    label_clusters,
    passage_vs_linf,
    shielded_independence_check,
)
from .scaling import (
    bernstein_bound,
    bernstein_experiment,
    build_sectors,
    directional_increment,
    fit_exponent,
    regularity_bound_check,
    randomized_regularity_sweep,
    sector_boundary_profile,
    truncation_check,
    verify_sector_coverage,
)
from .harness import DEFAULT_CONFIGS, ExperimentConfig, RunRecord, run_recipe

__all__ = [
    "Annulus",
    "BoundaryTimeline",
    "Contour",
    "DEFAULT_CONFIGS",
    "Edge",
    "EdgeWeightField",
    "ExperimentConfig",
    "GuardError",
    "HoleCandidateSpec",
    "LatticeBox",
    "PassageField",
    "RatioBound",
    "RunRecord",
    "YStatistic",
    "bad_contour_rate",
    "bellman_ford_reference",
    "bernstein_bound",
    "bernstein_experiment",
    "bound_ratio",
    "boundary_count_at",
    "boundary_timeline",
    "build_sectors",
    "chemical_distance",
    "compute_passage",
    "compute_passage_dense",
    "containment_constant",
    "count_hole_candidates",
    "decompose_complement",
    "directional_increment",
    "edge_boundary_at",
    "encloses_origin",
    "enclosing_contour_count",
    "exterior_boundary_at",
    "exterior_counts_at",
    "exterior_is_star_connected",
    "fit_exponent",
    "hole_census_at",
    "is_alpha_bad",
    "label_clusters",
    "load_passage",
    "neighbors",
    "parse_model",
    "passage_at_real_point",
    "passage_vs_linf",
    "randomized_regularity_sweep",
    "regularity_bound_check",
    "require_containment",
    "rough_time_density",
    "run_recipe",
    "sector_boundary_profile",
    "seed_stream",
    "shielded_independence_check",
    "star_animal_counts",
    "star_contour_bound",
    "star_neighbors",
    "truncation_check",
    "verify_sector_coverage",
]
