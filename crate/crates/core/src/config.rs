//! Prior hyperparameters and sampler configuration.

use crate::kernels::KernelKind;
use thiserror::Error;

/// Hyperparameters of every prior distribution used by the samplers.
///
/// Beta-stick shapes `a`, `b` get uniform priors over `a_range`/`b_range`;
/// atoms come from a normal base distribution; variances carry inverse-gamma
/// priors; the Gneiting scaling gets a uniform prior; the interaction
/// parameter gets a spike-and-slab prior with a beta slab.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperPriors {
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    /// Mean of the normal base distribution for atoms.
    pub base_mean: f64,
    /// Variance of the normal base distribution for atoms.
    pub base_var: f64,
    pub noise_shape: f64,
    pub noise_rate: f64,
    pub atom_var_shape: f64,
    pub atom_var_rate: f64,
    pub gamma_range: (f64, f64),
    /// Beta shapes of the slab density for the interaction parameter.
    pub lambda_slab: (f64, f64),
    /// Beta shapes of the prior on the slab weight.
    pub omega_lambda_prior: (f64, f64),
    /// Shape of the inverse-gamma bandwidth prior, scale tied to `nu`.
    pub bandwidth_shape: f64,
    /// Upper bound of the uniform prior on `nu`; `None` derives it from the
    /// maximum pairwise distance in the data.
    pub nu_max: Option<f64>,
}

impl Default for HyperPriors {
    fn default() -> Self {
        Self {
            a_range: (0.0, 10.0),
            b_range: (0.0, 10.0),
            base_mean: 0.0,
            base_var: 100.0,
            noise_shape: 0.01,
            noise_rate: 0.01,
            atom_var_shape: 2.0,
            atom_var_rate: 1.0,
            gamma_range: (0.0, 10.0),
            lambda_slab: (1.0, 1.0),
            omega_lambda_prior: (1.0, 1.0),
            bandwidth_shape: 1.5,
            nu_max: None,
        }
    }
}

impl HyperPriors {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let intervals = [
            ("a_range", self.a_range),
            ("b_range", self.b_range),
            ("gamma_range", self.gamma_range),
        ];
        for (name, (lo, hi)) in intervals {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() || lo < 0.0 {
                return Err(ConfigError::BadHyperPrior(name));
            }
        }
        let positives = [
            ("base_var", self.base_var),
            ("noise_shape", self.noise_shape),
            ("noise_rate", self.noise_rate),
            ("atom_var_shape", self.atom_var_shape),
            ("atom_var_rate", self.atom_var_rate),
            ("lambda_slab.0", self.lambda_slab.0),
            ("lambda_slab.1", self.lambda_slab.1),
            ("omega_lambda_prior.0", self.omega_lambda_prior.0),
            ("omega_lambda_prior.1", self.omega_lambda_prior.1),
            ("bandwidth_shape", self.bandwidth_shape),
        ];
        for (name, v) in positives {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::BadHyperPrior(name));
            }
        }
        if let Some(nu) = self.nu_max {
            if !(nu > 0.0) {
                return Err(ConfigError::BadHyperPrior("nu_max"));
            }
        }
        Ok(())
    }
}

/// Fixed hyperparameters of the Gaussian-process atoms used by the
/// varying-atoms sampler: exponential spatial covariance with the given
/// range, AR(1) temporal correlation, and marginal variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GpParams {
    pub decay: f64,
    pub rho: f64,
    pub var: f64,
}

impl Default for GpParams {
    fn default() -> Self {
        Self { decay: 0.5, rho: 0.5, var: 1.0 }
    }
}

/// Configuration of one MCMC run.
#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig {
    /// Truncation level M of the stick-breaking representation.
    pub truncation: usize,
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    pub kernel_kind: KernelKind,
    /// Bandwidths (h1, h2, h_t) for the separable kernel; `None` derives
    /// them from the domain (half-width per axis).
    pub bandwidths: Option<(f64, f64, f64)>,
    /// Random-walk scale for knot moves; `None` means 10% of the domain
    /// width per axis.
    pub knot_scale: Option<f64>,
    /// Random-walk scale for the Gneiting scaling; `None` means 10% of its
    /// prior range.
    pub gamma_scale: Option<f64>,
    /// Random-walk scale for within-slab interaction moves; `None` means
    /// 10% of [0, 1].
    pub lambda_scale: Option<f64>,
    /// Random-walk scale for the joint (a, b) move; `None` means 10% of the
    /// prior range.
    pub shape_scale: Option<f64>,
    pub varying_atoms: bool,
    pub gp: GpParams,
    /// Fraction of observed rows used for training in the varying-atoms
    /// sampler (its factorizations scale cubically).
    pub va_subsample: f64,
    /// Hard cap on the number of points factorized by the varying-atoms
    /// sampler; exceeding it is an error rather than a silent slowdown.
    pub va_max_points: usize,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            truncation: 100,
            n_iter: 20_000,
            n_burn: 10_000,
            thin: 1,
            seed: 1,
            kernel_kind: KernelKind::Gneiting,
            bandwidths: None,
            knot_scale: None,
            gamma_scale: None,
            lambda_scale: None,
            shape_scale: None,
            varying_atoms: false,
            gp: GpParams::default(),
            va_subsample: 1.0,
            va_max_points: 5000,
        }
    }
}

impl McmcConfig {
    pub fn kept_records(&self) -> usize {
        (self.n_iter - self.n_burn) / self.thin
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.truncation < 2 {
            return Err(ConfigError::BadMcmc("truncation must be >= 2"));
        }
        if self.n_iter <= self.n_burn {
            return Err(ConfigError::BadMcmc("n_iter must exceed n_burn"));
        }
        if self.thin == 0 || (self.n_iter - self.n_burn) % self.thin != 0 {
            return Err(ConfigError::BadMcmc("thin must divide n_iter - n_burn"));
        }
        if !(self.va_subsample > 0.0 && self.va_subsample <= 1.0) {
            return Err(ConfigError::BadMcmc("va_subsample must be in (0, 1]"));
        }
        if self.varying_atoms {
            if !(self.gp.decay > 0.0) || !(self.gp.var > 0.0) || self.gp.rho.abs() >= 1.0 {
                return Err(ConfigError::BadMcmc("gp params need decay > 0, var > 0, |rho| < 1"));
            }
        }
        for scale in [self.knot_scale, self.gamma_scale, self.lambda_scale, self.shape_scale]
            .into_iter()
            .flatten()
        {
            if !(scale >= 0.0) || !scale.is_finite() {
                return Err(ConfigError::BadMcmc("proposal scales must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid hyperprior: {0}")]
    BadHyperPrior(&'static str),
    #[error("invalid mcmc config: {0}")]
    BadMcmc(&'static str),
}
