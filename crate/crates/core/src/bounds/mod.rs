//! Evaluators for the regret bounds, the coverage coefficient, the
//! information ratio and the per-episode information inequality.

mod coverage;
mod info_ratio;
mod regret;
mod theorem;

pub use coverage::{coverage_coefficient, feature_covariance, CoverageResult, WeightSampler};
pub use info_ratio::{
    estimate_info_ratio, grid_ceil, info_ratio_from_samples, sample_deviations, InfoRatioEstimate, GRID_RATIO,
};
pub use regret::{
    bound_curve, bound_curve_csv, bound_eval, bound_formula, iota, scale, suboptimality_bound, BoundInputs,
    BoundRow,
};
pub use theorem::{
    check_theorem31, theorem31_experiment, EpisodeRecord, InfoAlong, SlackRow, Theorem31Config, Theorem31Report,
};
