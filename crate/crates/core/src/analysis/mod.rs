//! Numerical checks of the robustness and identifiability results on small,
//! exactly integrable problems.

mod argmin;
mod discrete;
mod influence;
mod kl;
mod rank;
mod robust;
mod toy;

pub use argmin::{population_argmin_1d, ArgminReport};
pub use discrete::{discrete_minimizer, discrete_oracle_deviation, example_joint, DiscreteJoint};
pub use influence::{clean_argmin, empirical_influence, IfFormulaContext, InfluenceReport, InfluenceSetup};
pub use kl::{kl_dv_identity_check, KlDvReport};
pub use rank::{random_probes, rank_condition, ExpFamilySpec, RankReport};
pub use robust::{strong_robustness_check, StrongRobustnessReport};
pub use toy::{bivariate_pdf, std_normal_pdf, Contamination, Joint, Marginal, Population, Quadrature, ScalarFamily};
