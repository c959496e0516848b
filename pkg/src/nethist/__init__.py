"""Network histograms: blockmodel graphon estimation with automatic
bandwidth selection, stochastic likelihood search, and oracle evaluation."""

from .graph import (
    CovariateTable,
    Graph,
    GraphError,
    degrees,
    estimate_density,
    filter_zero_degree,
    load_covariates,
    load_edge_list,
)
from .graphon import (
    Graphon,
    GraphonError,
    LatentSample,
    SparsitySchedule,
    block_average,
    builtin_graphon,
    sample_graph,
)
from .histogram import (
    Bandwidth,
    NetworkHistogram,
    bin_heights,
    evaluate_fhat,
    log_likelihood,
    normalized_log_likelihood,
)
from .optimizer import FitResult, SearchConfig, brute_force_fit, fit, random_assignment, swap_delta
from .bandwidth import (
    BandwidthSelection,
    degree_slope_fit,
    estimate_M2,
    oracle_h_star,
    rank_one_coefficient,
    select_bandwidth,
    theorem_bound,
    theorem_bound_optimized,
)
from .oracle import (
    AlignmentResult,
    OracleContext,
    aligned_ise,
    lemma_quadrature_bounds,
    mise_monte_carlo,
    oracle_estimator,
    oracle_labeling,
    prop1_bounds,
)

__version__ = "0.1.0"
