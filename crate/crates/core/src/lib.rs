//! Minimal contrast estimation for heavy-tailed moving averages
//! `X_t = ∫ g_ξ(t - s) dL_s` driven by a symmetric β-stable Lévy process.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`] – the parametric kernel families, their admissible
//!   parameter sets and the closed-form identities used as oracles.
//! * [`stable_sim`] – symmetric stable variates and discretised simulation of
//!   the moving average at integer times.
//! * [`charfn`] – β-norms of shifted kernel combinations, theoretical and
//!   empirical joint characteristic functions, and the dependence quantities
//!   entering the limiting covariance of the empirical characteristic function.
//! * [`estimator`] – the weighted L² contrast on a Gauss–Laguerre grid and its
//!   Nelder–Mead minimisation.
//! * [`clt_check`] – Monte Carlo checks of the central limit behaviour.
//! * [`harness`] – configuration driven Monte Carlo studies.
//! * [`oracle`] – closed-form identities against direct integration.
//! * [`cli`] – the `stable-mce` command line front-end.

pub mod charfn;
pub mod cli;
pub mod clt_check;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod kernels;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stable_sim;

pub use charfn::{beta_norm, empirical_cf, theoretical_cf, NormMethod, ShiftNorm};
pub use clt_check::{verify_clt, vn_statistic, CltReport};
pub use error::{Error, Result};
pub use estimator::{estimate, EstimationResult, QuadratureGrid, WeightSpec};
pub use harness::{run_study, MonteCarloReport, StudyConfig};
pub use kernels::{FamilyId, KernelModel, ParameterPoint};
pub use stable_sim::{SamplePath, SimConfig};
