//! Bounded kernels w: D × R² × T × R → [0, 1] that modulate stick masses
//! over space and time.
//!
//! Two working kernels are provided: a separable squared-exponential in
//! space and time, and the non-separable family
//!
//! ```text
//! w(s, ψ, t, ζ) = (γ|t−ζ|+1)^{-1} exp[ −((s1−ψ1)² + (s2−ψ2)²) / (γ|t−ζ|+1)^{λ/2} ]
//! ```
//!
//! whose interaction parameter λ ∈ [0, 1] makes the kernel separable at
//! λ = 0. The constant kernel turns the construction into an exchangeable
//! Dirichlet-process baseline.

use thiserror::Error;

/// Smallest kernel value ever returned. Weights cannot underflow to exact
/// zero, so log-space allocation updates never see −∞ from the kernel side.
pub const MIN_WEIGHT: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    SeparableExp,
    Gneiting,
    /// Evaluates to 1 everywhere; degenerates the process to an exchangeable
    /// Dirichlet process, used as an internal baseline.
    Constant,
}

impl KernelKind {
    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::SeparableExp => "separable",
            KernelKind::Gneiting => "gneiting",
            KernelKind::Constant => "constant",
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "separable" | "separable-exp" | "separableexp" => Ok(KernelKind::SeparableExp),
            "gneiting" => Ok(KernelKind::Gneiting),
            "constant" | "dp" => Ok(KernelKind::Constant),
            other => Err(format!("unknown kernel kind: {other}")),
        }
    }
}

/// Parameter pack for one kernel evaluation: the knot (ψ, ζ) plus whichever
/// of the bandwidths / scaling / interaction parameters the kind uses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    pub psi: (f64, f64),
    pub zeta: f64,
    /// Spatial bandwidths (h1, h2); separable kernel only.
    pub h: Option<(f64, f64)>,
    /// Temporal bandwidth; separable kernel only.
    pub h_t: Option<f64>,
    /// Scaling γ ≥ 0; Gneiting kernel only.
    pub gamma: f64,
    /// Interaction λ ∈ [0, 1]; Gneiting kernel only.
    pub lambda: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { psi: (0.0, 0.0), zeta: 0.0, h: None, h_t: None, gamma: 1.0, lambda: 0.0 }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("separable kernel requires spatial and temporal bandwidths")]
    MissingBandwidth,
    #[error("interaction parameter must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
}

/// Raw separable evaluation used by hot loops; bandwidths already unpacked.
#[inline]
pub(crate) fn separable_w(
    s: (f64, f64),
    t: f64,
    psi: (f64, f64),
    zeta: f64,
    h1: f64,
    h2: f64,
    h_t: f64,
) -> f64 {
    let d1 = (s.0 - psi.0) / h1;
    let d2 = (s.1 - psi.1) / h2;
    let dt = (t - zeta) / h_t;
    (-d1 * d1 - d2 * d2 - dt * dt).exp().max(MIN_WEIGHT)
}

/// Raw Gneiting evaluation used by hot loops.
#[inline]
pub(crate) fn gneiting_w(
    s: (f64, f64),
    t: f64,
    psi: (f64, f64),
    zeta: f64,
    gamma: f64,
    lambda: f64,
) -> f64 {
    let u = gamma * (t - zeta).abs() + 1.0;
    let d1 = s.0 - psi.0;
    let d2 = s.1 - psi.1;
    let scale = u.powf(lambda / 2.0);
    ((-(d1 * d1 + d2 * d2) / scale).exp() / u).max(MIN_WEIGHT)
}

/// Separable squared-exponential kernel:
/// exp(−(s1−ψ1)²/h1² − (s2−ψ2)²/h2²) · exp(−(t−ζ)²/h_t²).
pub fn eval_separable(s: (f64, f64), t: f64, kp: &KernelParams) -> Result<f64, KernelError> {
    let (h1, h2) = kp.h.ok_or(KernelError::MissingBandwidth)?;
    let h_t = kp.h_t.ok_or(KernelError::MissingBandwidth)?;
    if !(h1 > 0.0 && h2 > 0.0 && h_t > 0.0) {
        return Err(KernelError::MissingBandwidth);
    }
    Ok(separable_w(s, t, kp.psi, kp.zeta, h1, h2, h_t))
}

/// Non-separable kernel (γ|t−ζ|+1)⁻¹ · exp(−‖s−ψ‖² / (γ|t−ζ|+1)^{λ/2}).
pub fn eval_gneiting(s: (f64, f64), t: f64, kp: &KernelParams) -> Result<f64, KernelError> {
    if !(0.0..=1.0).contains(&kp.lambda) {
        return Err(KernelError::InvalidLambda(kp.lambda));
    }
    Ok(gneiting_w(s, t, kp.psi, kp.zeta, kp.gamma, kp.lambda))
}

/// Dispatches on the kernel kind; the constant kernel is 1 everywhere.
pub fn eval(kind: KernelKind, s: (f64, f64), t: f64, kp: &KernelParams) -> Result<f64, KernelError> {
    match kind {
        KernelKind::SeparableExp => eval_separable(s, t, kp),
        KernelKind::Gneiting => eval_gneiting(s, t, kp),
        KernelKind::Constant => Ok(1.0),
    }
}
