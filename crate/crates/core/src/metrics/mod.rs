//! Scores for learned representations and ratio estimates.

mod correlation;
mod gaussian;
mod nuisance;
mod probe;
mod whitening;

pub use correlation::{hungarian, mean_abs_correlation, pearson, CorrelationReport};
pub use gaussian::{analytic_gaussian_ratio, gaussian_mi, ratio_rmse, rmse_up_to_constant, Grid};
pub use nuisance::{distance_correlation, nuisance_independence_score};
pub use probe::{linear_probe, stratified_split, ProbeConfig};
pub use whitening::{robust_whiten, sym_eigenvalues, whiten, WhiteningTransform};
