//! Spatio-temporal stick-breaking mixtures: prior simulation, covariance
//! analysis, truncated blocked-Gibbs posterior inference with a
//! spike-and-slab separability test, a varying-atoms Gaussian-process
//! extension, synthetic data generation, and predictive evaluation.

pub mod cli;
pub mod config;
pub mod data;
pub mod datagen;
pub mod gp_atoms;
pub mod io;
pub mod kernels;
pub mod mcmc;
pub mod predict;
pub mod stickbreak;
pub mod util;
