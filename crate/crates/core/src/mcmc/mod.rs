//! Truncated blocked-Gibbs sampler for the single-atom spatio-temporal
//! stick-breaking mixture.
//!
//! A sweep runs the updates in fixed order: allocations → sticks → knots →
//! kernel hyperparameters → atoms → noise/regression → stick shapes.
//! Proposal scales adapt during burn-in only; the post-burn-in chain is a
//! fixed-kernel Markov chain. Chains are strictly sequential and
//! reproducible bit-for-bit under a fixed seed.

mod updates;

pub use updates::{
    lambda_spike_slab_step, log_likelihood, normal_posterior, omega_posterior_shapes,
    sample_inverse_gamma, sigma_eps_posterior, stick_beta_shapes, update_allocations,
    update_atoms, update_kernel_hyper, update_knots, update_noise_regression, update_shape_hyper,
    update_sticks, urn_allocation_probs, KernelHyperAccepts, KnotScales, LambdaStep, UrnAllocation,
};

use crate::config::{ConfigError, GpParams, HyperPriors, McmcConfig};
use crate::data::{Dataset, SpaceTimeDomain, SpaceTimePoint};
use crate::kernels::{KernelKind, KernelParams};
use crate::stickbreak::{self, StickState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("update_allocations: all component weights vanished at observation {observation}")]
    AllZeroWeights { observation: usize },
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<McmcError>,
    },
    #[error("pr_lambda_zero: trace comes from a {0} fit, which carries no interaction parameter")]
    NoLambdaInTrace(&'static str),
    #[error("varying-atoms sampler refused {n} points (cap {max}); subsample or raise the cap")]
    SizeGuardExceeded { n: usize, max: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run_chain: {0}")]
    BadInput(&'static str),
    #[error("atom-field factorization failed after jitter escalation")]
    FactorizationFailure,
}

/// Training view of a validated dataset: observed rows only, with the
/// domain required by knot moves.
#[derive(Clone, Debug)]
pub struct FitData {
    pub points: Vec<SpaceTimePoint>,
    pub y: Vec<f64>,
    pub x: Option<Vec<Vec<f64>>>,
    pub domain: SpaceTimeDomain,
}

impl FitData {
    /// Extracts the observed rows; the dataset must carry a domain
    /// (run it through `validate_dataset` first).
    pub fn from_dataset(ds: &Dataset) -> Result<Self, McmcError> {
        let domain = ds.domain.ok_or(McmcError::BadInput("dataset has no domain; validate it first"))?;
        let mut points = Vec::new();
        let mut y = Vec::new();
        let mut xs: Vec<Vec<f64>> = Vec::new();
        let has_covariates = ds.covariate_dim() > 0;
        for obs in &ds.observations {
            if let Some(value) = obs.y {
                points.push(obs.point);
                y.push(value);
                if has_covariates {
                    xs.push(obs.x.clone().unwrap_or_default());
                }
            }
        }
        if points.is_empty() {
            return Err(McmcError::BadInput("dataset has no observed responses"));
        }
        Ok(Self { points, y, x: has_covariates.then_some(xs), domain })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Residual y_i − x_iᵀβ.
    #[inline]
    pub fn residual(&self, i: usize, beta: &[f64]) -> f64 {
        match &self.x {
            Some(xs) if !beta.is_empty() => {
                self.y[i] - xs[i].iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
            }
            _ => self.y[i],
        }
    }
}

/// Full latent state of the single-atom sampler.
///
/// The Gneiting scaling and interaction live inside every knot's parameter
/// pack; the accessors below treat them as the shared values they are.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentState {
    /// Component allocation per observation (0-based slot index).
    pub c: Vec<usize>,
    pub sticks: StickState,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub sigma2_eps: f64,
    pub beta: Vec<f64>,
    pub omega_lambda: f64,
}

impl LatentState {
    pub fn gamma(&self) -> f64 {
        self.sticks.knots[0].gamma
    }

    pub fn lambda(&self) -> f64 {
        self.sticks.knots[0].lambda
    }

    pub fn set_gamma(&mut self, gamma: f64) {
        for knot in &mut self.sticks.knots {
            knot.gamma = gamma;
        }
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        for knot in &mut self.sticks.knots {
            knot.lambda = lambda;
        }
    }

    pub fn n_occupied(&self) -> usize {
        let mut seen = vec![false; self.sticks.truncation()];
        let mut count = 0;
        for &k in &self.c {
            if !seen[k] {
                seen[k] = true;
                count += 1;
            }
        }
        count
    }

    /// Checks the state invariants: positive variances, λ ∈ [0, 1], and
    /// allocations within the truncation.
    pub fn check_invariants(&self) -> bool {
        self.sigma2.iter().all(|&v| v > 0.0)
            && self.sigma2_eps > 0.0
            && (0.0..=1.0).contains(&self.lambda())
            && self.c.iter().all(|&k| k < self.sticks.truncation())
            && self.sticks.validate().is_ok()
    }
}

/// One recorded post-burn-in state.
#[derive(Clone, Debug, PartialEq)]
pub struct KeptState {
    pub iter: usize,
    pub v: Vec<f64>,
    /// (ψ1, ψ2, ζ) per component.
    pub knots: Vec<(f64, f64, f64)>,
    pub gamma: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub sigma2_eps: f64,
    pub beta: Vec<f64>,
    pub n_occupied: usize,
    pub log_lik: f64,
    /// Varying-atoms runs: per-component atom paths at the training points.
    pub atoms: Option<Vec<Vec<f64>>>,
}

/// Stored post-burn-in samples plus the configuration echo needed to
/// reconstruct predictive mixtures.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace {
    pub kind: KernelKind,
    pub truncation: usize,
    pub seed: u64,
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub bandwidths: Option<(f64, f64, f64)>,
    pub base_mean: f64,
    pub base_var: f64,
    pub atom_var_shape: f64,
    pub atom_var_rate: f64,
    pub covariate_dim: usize,
    pub varying_atoms: bool,
    pub gp: Option<GpParams>,
    /// Training points of a varying-atoms run (atom paths refer to these).
    pub train_points: Option<Vec<SpaceTimePoint>>,
    pub records: Vec<KeptState>,
}

impl ChainTrace {
    /// Rebuilds the stick state of one kept iteration.
    pub fn stick_state(&self, record: &KeptState) -> StickState {
        let h = self.bandwidths.map(|(h1, h2, _)| (h1, h2));
        let h_t = self.bandwidths.map(|(_, _, ht)| ht);
        let knots = record
            .knots
            .iter()
            .map(|&(p1, p2, zeta)| KernelParams {
                psi: (p1, p2),
                zeta,
                h,
                h_t,
                gamma: record.gamma,
                lambda: record.lambda,
            })
            .collect();
        StickState { v: record.v.clone(), knots, kind: self.kind, a: record.a, b: record.b }
    }
}

/// Posterior summary of the separability test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaReport {
    /// Fraction of kept iterations with λ exactly zero.
    pub pr_zero: f64,
    /// Mean of λ over iterations with λ > 0; `None` when the slab is never
    /// visited.
    pub mean_positive: Option<f64>,
}

/// Spike mass and conditional slab mean of the interaction parameter.
/// Errors for fits whose kernel carries no interaction parameter.
pub fn pr_lambda_zero(trace: &ChainTrace) -> Result<LambdaReport, McmcError> {
    if trace.kind != KernelKind::Gneiting {
        return Err(McmcError::NoLambdaInTrace(trace.kind.name()));
    }
    let n = trace.records.len();
    assert!(n > 0, "empty trace");
    let zeros = trace.records.iter().filter(|r| r.lambda == 0.0).count();
    let positives: Vec<f64> =
        trace.records.iter().filter(|r| r.lambda > 0.0).map(|r| r.lambda).collect();
    Ok(LambdaReport {
        pr_zero: zeros as f64 / n as f64,
        mean_positive: if positives.is_empty() {
            None
        } else {
            Some(positives.iter().sum::<f64>() / positives.len() as f64)
        },
    })
}

/// Derived proposal scales: fractions of each parameter's prior range,
/// with a shared multiplier adapted during burn-in.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Scales {
    pub knot: KnotScales,
    pub gamma: f64,
    pub lambda: f64,
    pub shape_a: f64,
    pub shape_b: f64,
    knot_mult: f64,
    gamma_mult: f64,
    lambda_mult: f64,
    shape_mult: f64,
}

impl Scales {
    pub(crate) fn derive(config: &McmcConfig, hyper: &HyperPriors, domain: &SpaceTimeDomain) -> Self {
        let frac_knot = config.knot_scale.unwrap_or(0.1);
        let frac_gamma = config.gamma_scale.unwrap_or(0.1);
        let frac_lambda = config.lambda_scale.unwrap_or(0.1);
        let frac_shape = config.shape_scale.unwrap_or(0.1);
        let w1 = domain.s1_range.1 - domain.s1_range.0;
        let w2 = domain.s2_range.1 - domain.s2_range.0;
        let wt = ((domain.t_max as f64) - 1.0).max(1.0);
        Self {
            knot: KnotScales { s1: frac_knot * w1, s2: frac_knot * w2, t: frac_knot * wt },
            gamma: frac_gamma * (hyper.gamma_range.1 - hyper.gamma_range.0),
            lambda: frac_lambda,
            shape_a: frac_shape * (hyper.a_range.1 - hyper.a_range.0),
            shape_b: frac_shape * (hyper.b_range.1 - hyper.b_range.0),
            knot_mult: 1.0,
            gamma_mult: 1.0,
            lambda_mult: 1.0,
            shape_mult: 1.0,
        }
    }

    pub(crate) fn knot_scales(&self) -> KnotScales {
        KnotScales {
            s1: self.knot.s1 * self.knot_mult,
            s2: self.knot.s2 * self.knot_mult,
            t: self.knot.t * self.knot_mult,
        }
    }

    pub(crate) fn gamma_scale(&self) -> f64 {
        self.gamma * self.gamma_mult
    }

    pub(crate) fn lambda_scale(&self) -> f64 {
        self.lambda * self.lambda_mult
    }

    pub(crate) fn shape_a_scale(&self) -> f64 {
        self.shape_a * self.shape_mult
    }

    pub(crate) fn shape_b_scale(&self) -> f64 {
        self.shape_b * self.shape_mult
    }

    fn adapt(rate: f64, mult: &mut f64) {
        // nudge toward a 30% acceptance rate, clamped to sane factors
        *mult = (*mult * ((rate - 0.3) * 1.0).exp()).clamp(1e-3, 1e3);
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct AcceptWindow {
    knot_acc: u64,
    knot_prop: u64,
    gamma_acc: u64,
    gamma_prop: u64,
    lambda_acc: u64,
    lambda_prop: u64,
    shape_acc: u64,
    shape_prop: u64,
}

impl AcceptWindow {
    fn apply(&mut self, scales: &mut Scales) {
        if self.knot_prop > 0 {
            Scales::adapt(self.knot_acc as f64 / self.knot_prop as f64, &mut scales.knot_mult);
        }
        if self.gamma_prop > 0 {
            Scales::adapt(self.gamma_acc as f64 / self.gamma_prop as f64, &mut scales.gamma_mult);
        }
        if self.lambda_prop > 0 {
            Scales::adapt(self.lambda_acc as f64 / self.lambda_prop as f64, &mut scales.lambda_mult);
        }
        if self.shape_prop > 0 {
            Scales::adapt(self.shape_acc as f64 / self.shape_prop as f64, &mut scales.shape_mult);
        }
        *self = Self::default();
    }
}

/// Separable-kernel bandwidths derived from the bandwidth prior: the
/// midpoint ν_max/2 of the uniform prior on ν sets the inverse-gamma scale,
/// and h = sqrt(E[h²]) under that prior.
pub(crate) fn derive_bandwidths(hyper: &HyperPriors, domain: &SpaceTimeDomain) -> (f64, f64, f64) {
    let nu_max = hyper.nu_max.unwrap_or_else(|| domain.diagonal());
    let nu = nu_max / 2.0;
    let factor = (0.5 / (hyper.bandwidth_shape - 1.0).max(0.25)).sqrt();
    let h_spatial = (nu * factor).max(1e-6);
    let nu_t = ((domain.t_max as f64 - 1.0) / 2.0).max(0.5);
    (h_spatial, h_spatial, (nu_t * factor).max(0.5))
}

fn population_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).max(1e-12)
}

/// Initial state: allocations by quantile binning of y into min(10, M)
/// groups, bin-mean atoms, half sticks, uniform random knots, γ = 1, λ = 0,
/// a = b = 1, σ²_ε = var(y)/2.
pub(crate) fn init_state<R: Rng>(
    data: &FitData,
    config: &McmcConfig,
    hyper: &HyperPriors,
    rng: &mut R,
) -> LatentState {
    let m = config.truncation;
    let n = data.len();
    let groups = 10.min(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| data.y[i].total_cmp(&data.y[j]));
    let mut c = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        c[i] = (rank * groups / n).min(groups - 1);
    }

    let var_y = population_variance(&data.y);
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    for i in 0..n {
        sums[c[i]] += data.y[i];
        counts[c[i]] += 1;
    }
    let base = Normal::new(hyper.base_mean, hyper.base_var.sqrt()).unwrap();
    let mu: Vec<f64> = (0..m)
        .map(|k| if counts[k] > 0 { sums[k] / counts[k] as f64 } else { base.sample(rng) })
        .collect();

    let bandwidths = match config.kernel_kind {
        KernelKind::SeparableExp => {
            Some(config.bandwidths.unwrap_or_else(|| derive_bandwidths(hyper, &data.domain)))
        }
        _ => None,
    };
    let gamma_init = 1.0f64.clamp(hyper.gamma_range.0 + 1e-9, hyper.gamma_range.1);
    let template = KernelParams {
        psi: (0.0, 0.0),
        zeta: 1.0,
        h: bandwidths.map(|(h1, h2, _)| (h1, h2)),
        h_t: bandwidths.map(|(_, _, ht)| ht),
        gamma: gamma_init,
        lambda: 0.0,
    };
    let knots: Vec<KernelParams> =
        (0..m).map(|_| stickbreak::sample_knot(&template, &data.domain, rng)).collect();

    LatentState {
        c,
        sticks: StickState { v: vec![0.5; m], knots, kind: config.kernel_kind, a: 1.0, b: 1.0 },
        mu,
        sigma2: vec![var_y / 4.0; m],
        sigma2_eps: var_y / 2.0,
        beta: vec![0.0; data.x.as_ref().map_or(0, |xs| xs[0].len())],
        omega_lambda: 0.5,
    }
}

fn record_state(iter: usize, state: &LatentState, data: &FitData, atoms: Option<Vec<Vec<f64>>>) -> KeptState {
    KeptState {
        iter,
        v: state.sticks.v.clone(),
        knots: state.sticks.knots.iter().map(|k| (k.psi.0, k.psi.1, k.zeta)).collect(),
        gamma: state.gamma(),
        lambda: state.lambda(),
        a: state.sticks.a,
        b: state.sticks.b,
        mu: state.mu.clone(),
        sigma2: state.sigma2.clone(),
        sigma2_eps: state.sigma2_eps,
        beta: state.beta.clone(),
        n_occupied: state.n_occupied(),
        log_lik: log_likelihood(state, data),
        atoms,
    }
}

pub(crate) fn trace_header(config: &McmcConfig, hyper: &HyperPriors, covariate_dim: usize) -> ChainTrace {
    ChainTrace {
        kind: config.kernel_kind,
        truncation: config.truncation,
        seed: config.seed,
        n_iter: config.n_iter,
        n_burn: config.n_burn,
        thin: config.thin,
        bandwidths: None,
        base_mean: hyper.base_mean,
        base_var: hyper.base_var,
        atom_var_shape: hyper.atom_var_shape,
        atom_var_rate: hyper.atom_var_rate,
        covariate_dim,
        varying_atoms: false,
        gp: None,
        train_points: None,
        records: Vec::with_capacity(config.kept_records()),
    }
}

/// Runs the single-atom blocked-Gibbs chain. Deterministic given
/// `config.seed`; records every `thin`-th post-burn-in state.
pub fn run_chain(
    dataset: &Dataset,
    config: &McmcConfig,
    hyper: &HyperPriors,
) -> Result<ChainTrace, McmcError> {
    config.validate()?;
    hyper.validate()?;
    let data = FitData::from_dataset(dataset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = init_state(&data, config, hyper, &mut rng);
    let mut scales = Scales::derive(config, hyper, &data.domain);
    let mut window = AcceptWindow::default();

    let mut trace = trace_header(config, hyper, data.x.as_ref().map_or(0, |xs| xs[0].len()));
    trace.bandwidths = state.sticks.knots[0].h.zip(state.sticks.knots[0].h_t).map(|((h1, h2), ht)| (h1, h2, ht));

    for iter in 0..config.n_iter {
        let at = |source: McmcError| McmcError::AtIteration { iteration: iter, source: Box::new(source) };
        update_allocations(&mut state, &data, &mut rng).map_err(at)?;
        update_sticks(&mut state, &data, &mut rng);
        let (ka, kp) = update_knots(&mut state, &data, &scales.knot_scales(), &mut rng);
        window.knot_acc += ka;
        window.knot_prop += kp;
        if config.kernel_kind == KernelKind::Gneiting {
            let accepts = update_kernel_hyper(
                &mut state,
                &data,
                hyper,
                scales.gamma_scale(),
                scales.lambda_scale(),
                &mut rng,
            );
            window.gamma_acc += accepts.gamma as u64;
            window.gamma_prop += 1;
            if let Some(within) = accepts.lambda_within {
                window.lambda_acc += within as u64;
                window.lambda_prop += 1;
            }
        }
        update_atoms(&mut state, &data, hyper, &mut rng);
        update_noise_regression(&mut state, &data, hyper, &mut rng);
        let accepted = update_shape_hyper(
            &mut state,
            hyper,
            scales.shape_a_scale(),
            scales.shape_b_scale(),
            &mut rng,
        );
        window.shape_acc += accepted as u64;
        window.shape_prop += 1;

        if iter < config.n_burn && (iter + 1) % 50 == 0 {
            window.apply(&mut scales);
        }
        if iter >= config.n_burn && (iter - config.n_burn) % config.thin == 0 {
            debug_assert!(state.check_invariants());
            trace.records.push(record_state(iter, &state, &data, None));
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, Observation};

    fn gaussian_dataset(n: usize, mu: f64, sd: f64, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(mu, sd).unwrap();
        let obs = (0..n)
            .map(|_| {
                let p = SpaceTimePoint::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen_range(1..=6));
                Observation::new(p, normal.sample(&mut rng))
            })
            .collect();
        let (ds, _) = crate::data::validate_dataset(Dataset::new(obs)).unwrap();
        ds
    }

    fn desk_config(kind: KernelKind, seed: u64) -> McmcConfig {
        McmcConfig {
            truncation: 20,
            n_iter: 300,
            n_burn: 100,
            thin: 2,
            seed,
            kernel_kind: kind,
            ..McmcConfig::default()
        }
    }

    #[test]
    fn identical_seeds_give_bit_identical_traces() {
        let ds = gaussian_dataset(40, 1.0, 0.7, 5);
        let cfg = desk_config(KernelKind::Gneiting, 33);
        let hyper = HyperPriors::default();
        let t1 = run_chain(&ds, &cfg, &hyper).unwrap();
        let t2 = run_chain(&ds, &cfg, &hyper).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn trace_length_is_exact() {
        let ds = gaussian_dataset(30, 0.0, 1.0, 6);
        let cfg = desk_config(KernelKind::SeparableExp, 1);
        let trace = run_chain(&ds, &cfg, &HyperPriors::default()).unwrap();
        assert_eq!(trace.records.len(), cfg.kept_records());
        assert_eq!(trace.records.len(), 100);
        assert!(trace.bandwidths.is_some());
    }

    #[test]
    fn single_gaussian_recovers_mean_within_three_posterior_sd() {
        let ds = gaussian_dataset(150, 2.0, 1.0, 7);
        let mut cfg = desk_config(KernelKind::Gneiting, 9);
        cfg.n_iter = 600;
        cfg.n_burn = 200;
        let trace = run_chain(&ds, &cfg, &HyperPriors::default()).unwrap();
        // mean of the heaviest component (by raw stick) per kept iteration
        let doms: Vec<f64> = trace
            .records
            .iter()
            .map(|r| {
                let k = (0..r.v.len()).max_by(|&i, &j| r.v[i].total_cmp(&r.v[j])).unwrap();
                r.mu[k]
            })
            .collect();
        let n = doms.len() as f64;
        let mean = doms.iter().sum::<f64>() / n;
        let sd = (doms.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n).sqrt();
        assert!(
            (mean - 2.0).abs() < 3.0 * sd.max(0.05),
            "posterior mean {mean}, sd {sd}"
        );
    }

    #[test]
    fn log_likelihood_trace_is_finite_and_invariants_hold() {
        let ds = gaussian_dataset(60, -1.0, 2.0, 8);
        let cfg = desk_config(KernelKind::Gneiting, 21);
        let trace = run_chain(&ds, &cfg, &HyperPriors::default()).unwrap();
        for r in &trace.records {
            assert!(r.log_lik.is_finite());
            assert!(r.sigma2_eps > 0.0);
            assert!(r.sigma2.iter().all(|&v| v > 0.0));
            assert!((0.0..=1.0).contains(&r.lambda));
            assert!(r.n_occupied >= 1);
        }
    }

    #[test]
    fn constant_kernel_chain_runs_without_kernel_moves() {
        let ds = gaussian_dataset(40, 0.5, 1.0, 11);
        let cfg = desk_config(KernelKind::Constant, 2);
        let trace = run_chain(&ds, &cfg, &HyperPriors::default()).unwrap();
        assert!(trace.records.iter().all(|r| r.lambda == 0.0));
        assert!(pr_lambda_zero(&trace).is_err());
    }

    #[test]
    fn lambda_report_counts_spike_mass() {
        let ds = gaussian_dataset(30, 0.0, 1.0, 12);
        let cfg = desk_config(KernelKind::Gneiting, 3);
        let mut trace = run_chain(&ds, &cfg, &HyperPriors::default()).unwrap();
        // overwrite λ values to a deterministic pattern: (0, 0, 0.4, 0.6, ...)
        for (i, r) in trace.records.iter_mut().enumerate() {
            r.lambda = match i % 4 {
                0 | 1 => 0.0,
                2 => 0.4,
                _ => 0.6,
            };
        }
        let report = pr_lambda_zero(&trace).unwrap();
        assert!((report.pr_zero - 0.5).abs() < 1e-12);
        assert!((report.mean_positive.unwrap() - 0.5).abs() < 1e-12);

        for r in trace.records.iter_mut() {
            r.lambda = 0.0;
        }
        let report = pr_lambda_zero(&trace).unwrap();
        assert_eq!(report.pr_zero, 1.0);
        assert_eq!(report.mean_positive, None);
    }

    #[test]
    fn missing_responses_are_excluded_from_fitting() {
        let mut ds = gaussian_dataset(25, 0.0, 1.0, 13);
        ds.observations.push(Observation {
            point: SpaceTimePoint::new(0.5, 0.5, 1),
            y: None,
            x: None,
        });
        let (ds, _) = crate::data::validate_dataset(ds).unwrap();
        let data = FitData::from_dataset(&ds).unwrap();
        assert_eq!(data.len(), 25);
    }
}
