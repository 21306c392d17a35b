"""Linear-ramp QAOA parameter extrapolation pipeline.

Builds QUBO instances for portfolio selection, feature selection, and
2-clustering (MaxCut); simulates linear-ramp QAOA circuits exactly; optimizes
the two ramp scales by iterated grid search with skew-Gaussian landscape
fits; extrapolates parameters from small sub-instances to the full size; and
compares the resulting quantum-runtime scaling against classical baselines.
"""

from .qubo import (
    BruteForceResult,
    CardinalityConstraint,
    ClusterData,
    FeatureData,
    PortfolioData,
    ProblemFamily,
    QuboInstance,
    brute_force_solve,
    build_clustering_qubo,
    build_feature_qubo,
    build_portfolio_qubo,
    cost_table,
    evaluate,
    sample_sub_instance,
)
from .simulate import (
    LinearRampSchedule,
    Statevector,
    SuccessProbability,
    build_schedule,
    simulate,
    simulate_batch,
    success_probability,
)
from .landscape import (
    GridSearchLandscape,
    GridSpec,
    LandscapeOptimum,
    SkewGaussianParams,
    fit_skew_gaussian,
    locate_maximum,
    reduce_grid,
    run_grid_search,
    skew_gaussian,
)
from .extrapolation import (
    ExtrapolationResult,
    LogLogFit,
    SubSizeOptimum,
    extrapolate_params,
    fit_loglog,
)
from .runtime import (
    ChainCache,
    ChainConfig,
    DepthModel,
    DepthOptimizationResult,
    ShotEstimate,
    circuit_depth,
    estimate_total_depth,
    median_shots,
    optimize_depth,
    p_grid,
    refine_parameters,
)
from .classical import (
    FitMethod,
    PowerLawFit,
    RuntimeRecord,
    ScalingFit,
    fit_power_law,
    fit_scaling_geomean,
    fit_scaling_robust,
    measure_classical_runtime,
    simulated_annealing_solve,
)
from .datasets import (
    generate_blobs,
    generate_moons,
    ingest_feature_csv,
    ingest_portfolio_csv,
    synthetic_feature_table,
    synthetic_portfolio_universe,
)
from .pipeline import ExperimentConfig, ResultsStore, run_experiment

__version__ = "0.1.0"
