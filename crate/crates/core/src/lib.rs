//! Meta-analytic-predictive (MAP) priors from a single external study.
//!
//! Under the normal-normal hierarchical model with a flat prior on the
//! overall mean, one external estimate `y₁ ± s₁` and a heterogeneity prior
//! `p(τ)` give a predictive prior for a new study's effect that is a normal
//! scale mixture with location `y₁` and conditional variance `s₁² + 2τ²`.
//! This crate evaluates that prior, combines it with a second study
//! (shrinkage), computes effective sample sizes, and maps heterogeneity
//! priors onto power-prior exponents and bias-allowance priors.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the report and CLI layer uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli_io;
pub mod correspondences;
pub mod distribution;
pub mod error;
pub mod het_priors;
pub mod information;
pub mod map_core;
pub mod quadrature;
pub mod real;
pub mod shrinkage;
pub mod special;

pub use correspondences::{
    a0_density, a0_from_tau, beta_prior_from_tau_prior, reference_model_posterior, tau_from_a0,
};
pub use distribution::Univariate;
pub use error::{Error, Result};
pub use het_priors::Family;
pub use information::{ess_elir, ess_table, map_ess, uisd, SupportHint};
pub use real::Real;
pub use shrinkage::{mac_oracle, shrinkage_posterior, width_ratio, GridSettings, PosteriorSummary};

pub type HeterogeneityPrior = het_priors::HeterogeneityPrior<f64>;
pub type Moment = het_priors::Moment<f64>;
pub type StudyEstimate = map_core::StudyEstimate<f64>;
pub type MapPrior = map_core::MapPrior<f64>;
pub type ShrinkagePosterior = shrinkage::ShrinkagePosterior<f64>;
pub type PowerPriorMap = correspondences::PowerPriorMap<f64>;
pub type BiasAllowancePrior = correspondences::BiasAllowancePrior<f64>;
pub type InformationSummary = information::InformationSummary<f64>;
pub type Normal = distribution::Normal<f64>;
