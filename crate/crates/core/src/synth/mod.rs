//! Synthetic sources, mixing, pairing and contamination.

mod contamination;
pub mod dump;
mod mixing;
mod scenarios;
mod sources;

pub use contamination::{contaminate_pairs, outlier_fraction, ContaminationSpec, OutlierDensity, DEFAULT_OUTLIER_OFFSET};
pub use mixing::{condition_number, mix, MixingNet, DEFAULT_MAX_CONDITION};
pub use scenarios::{gen_nuisance_scenario, make_lagged_pairs, make_pcl_pairs};
pub use sources::{
    contaminate_timeseries, gen_ar_laplace, gen_logcosh_sources, gen_outlier_conditional, laplace, random_source_weights, sech_cdf,
    sech_inv_cdf, sech_variate, ArLaplace,
};
