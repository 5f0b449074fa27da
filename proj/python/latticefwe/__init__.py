"""Family-wise error thresholds for lattice-sampled random fields.

Analytic RFT and Bonferroni thresholds, the crossover smoothness between
them, a survey-distribution analysis, and a Monte Carlo field simulator
for validating the analytics.
"""

from latticefwe._core import (
    FieldSpec,
    LatticeSpec,
    ReselVector,
    ThresholdError,
    ThresholdPair,
    __version__,
    adjust_model,
    analyze_survey_file,
    bonferroni_threshold,
    compare_thresholds,
    crossover_smoothness,
    derive_seed,
    ec_density,
    empirical_fwe,
    estimate_fwhm,
    expected_ec,
    fail_percentage,
    fit_ratio_model,
    generate_smooth_field,
    generate_t_field,
    normal_cdf,
    normal_quantile,
    normal_tail,
    prob_meets_assumption,
    realization_seed,
    resel_count_cuboid,
    resel_count_simplified,
    rft_threshold,
    sweep,
    t_quantile,
    t_tail,
    voxel_count,
    welch_t_test,
    wilson_interval,
)

__all__ = [
    "FieldSpec",
    "LatticeSpec",
    "ReselVector",
    "ThresholdError",
    "ThresholdPair",
    "__version__",
    "adjust_model",
    "analyze_survey_file",
    "bonferroni_threshold",
    "compare_thresholds",
    "crossover_smoothness",
    "derive_seed",
    "ec_density",
    "empirical_fwe",
    "estimate_fwhm",
    "expected_ec",
    "fail_percentage",
    "fit_ratio_model",
    "generate_smooth_field",
    "generate_t_field",
    "normal_cdf",
    "normal_quantile",
    "normal_tail",
    "prob_meets_assumption",
    "realization_seed",
    "resel_count_cuboid",
    "resel_count_simplified",
    "rft_threshold",
    "sweep",
    "t_quantile",
    "t_tail",
    "voxel_count",
    "welch_t_test",
    "wilson_interval",
]
