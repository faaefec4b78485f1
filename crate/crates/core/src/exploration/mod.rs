//! Gaussian-process CTR uncertainty and Thompson-sampling exploration.

mod bandit;
mod gp;

pub use bandit::{bandit_simulate, one_hot_arms, BanditConfig, BanditTrace, Policy};
pub use gp::{
    gp_fit, gp_fit_gaussian, gp_predict, rbf_kernel, thompson_pctr, GpState, KernelConfig,
    KernelKind, Likelihood,
};
