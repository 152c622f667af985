//! Random-matrix and β-ensemble samplers.

mod ensembles;
mod hermitian;
mod loggas;
mod rng;
mod tridiag;

pub use ensembles::{
    invert_laguerre, sample_ergodic, sample_gbe, sample_gue, sample_hp_cayley, sample_laguerre, sample_mixture,
    EnsembleSpec, GbeTridiagonal, LogGasDensity, Model,
};
pub use hermitian::{eigenvalues, HermitianMatrix};
pub use loggas::{log_density_hp, log_density_il, mcmc_chain, mcmc_loggas, McmcChain, McmcConfig, McmcResult};
pub use rng::RngStream;
pub use tridiag::{det_ratio, resolvent_sums, tridiag_eigenvalues};
