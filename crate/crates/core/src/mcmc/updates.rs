//! Individual Gibbs and Metropolis updates of the blocked sampler.
//!
//! Every update mutates the latent state in place and draws from the
//! supplied generator in a fixed order, so a full sweep is reproducible
//! bit-for-bit under a fixed seed.

use super::{FitData, LatentState, McmcError};
use crate::config::HyperPriors;
use crate::kernels::KernelKind;
use crate::stickbreak;
use crate::util::{ln_normal_pdf, reflect_into, sample_categorical_log};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

/// Allocation-conditional log likelihood:
/// Σ_i log N(y_i − x_iᵀβ; μ_{c_i}, σ²_{c_i} + σ²_ε).
pub fn log_likelihood(state: &LatentState, data: &FitData) -> f64 {
    (0..data.len())
        .map(|i| {
            let k = state.c[i];
            let resid = data.residual(i, &state.beta);
            ln_normal_pdf(resid, state.mu[k], state.sigma2[k] + state.sigma2_eps)
        })
        .sum()
}

/// Per-observation categorical reallocation, computed in log space with
/// probabilities ∝ π_k(s_i, t_i) · N(y_i − x_iᵀβ; μ_k, σ²_k + σ²_ε).
pub fn update_allocations<R: Rng>(
    state: &mut LatentState,
    data: &FitData,
    rng: &mut R,
) -> Result<(), McmcError> {
    let m = state.sticks.truncation();
    let mut lp = vec![0.0; m];
    for i in 0..data.len() {
        let lw = stickbreak::log_weights(&state.sticks, &data.points[i]);
        let resid = data.residual(i, &state.beta);
        for k in 0..m {
            lp[k] = lw[k] + ln_normal_pdf(resid, state.mu[k], state.sigma2[k] + state.sigma2_eps);
        }
        match sample_categorical_log(rng, &lp) {
            Some(k) => state.c[i] = k,
            None => return Err(McmcError::AllZeroWeights { observation: i + 1 }),
        }
    }
    Ok(())
}

/// Beta shapes of the stick full conditional given augmentation counts.
pub fn stick_beta_shapes(a: f64, b: f64, n_success: u32, n_fail: u32) -> (f64, f64) {
    (a + n_success as f64, b + n_fail as f64)
}

/// Stick update through the pairwise Bernoulli augmentation.
///
/// The augmentation sequence of subject i is anchored at its allocation:
/// A and B both equal one at k = c_i, and for k < c_i the pair is drawn
/// conditional on not both being one. Sticks untouched by any subject
/// refresh from their Beta(a, b) prior.
pub fn update_sticks<R: Rng>(state: &mut LatentState, data: &FitData, rng: &mut R) {
    let m = state.sticks.truncation();
    let mut n_success = vec![0u32; m];
    let mut n_fail = vec![0u32; m];
    for i in 0..data.len() {
        let ci = state.c[i];
        n_success[ci] += 1;
        let p = &data.points[i];
        for k in 0..ci {
            let w = state.sticks.kernel_weight(k, p);
            let v = state.sticks.v[k];
            // P(A=1 | not both) = V(1−w) / (1 − Vw)
            let p_a1 = v * (1.0 - w) / (1.0 - v * w);
            if rng.gen::<f64>() < p_a1 {
                n_success[k] += 1;
            } else {
                n_fail[k] += 1;
            }
        }
    }
    for k in 0..m {
        let (alpha, beta) = stick_beta_shapes(state.sticks.a, state.sticks.b, n_success[k], n_fail[k]);
        let draw = Beta::new(alpha, beta).unwrap().sample(rng);
        state.sticks.v[k] = draw.clamp(1e-12, 1.0 - 1e-12);
    }
}

/// Per-axis random-walk scales for the knot move.
#[derive(Clone, Copy, Debug)]
pub struct KnotScales {
    pub s1: f64,
    pub s2: f64,
    pub t: f64,
}

/// Per-component joint random-walk move on (ψ_k, ζ_k), reflected at the
/// domain bounds, targeting the allocation likelihood Π_i π_{c_i}(s_i, t_i)
/// under uniform knot priors. Returns (accepted, proposed).
pub fn update_knots<R: Rng>(
    state: &mut LatentState,
    data: &FitData,
    scales: &KnotScales,
    rng: &mut R,
) -> (u64, u64) {
    if state.sticks.kind == KernelKind::Constant {
        return (0, 0);
    }
    let m = state.sticks.truncation();
    let n = data.len();
    // bucket members and order observations by allocation so the
    // "allocated beyond k" set is a suffix
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..n {
        members[state.c[i]].push(i);
    }
    let mut by_component: Vec<usize> = (0..n).collect();
    by_component.sort_by_key(|&i| state.c[i]);
    // start[k] = first position in by_component with c_i >= k
    let mut start = vec![n; m + 1];
    let mut pos = 0;
    for (k, slot) in start.iter_mut().enumerate() {
        while pos < n && state.c[by_component[pos]] < k {
            pos += 1;
        }
        *slot = pos;
    }

    let normal = Normal::new(0.0, 1.0).unwrap();
    let (mut accepted, mut proposed) = (0u64, 0u64);
    let domain = &data.domain;
    for k in 0..m {
        let cur = state.sticks.knots[k];
        let mut prop = cur;
        prop.psi.0 = reflect_into(
            cur.psi.0 + scales.s1 * normal.sample(rng),
            domain.s1_range.0,
            domain.s1_range.1,
        );
        prop.psi.1 = reflect_into(
            cur.psi.1 + scales.s2 * normal.sample(rng),
            domain.s2_range.0,
            domain.s2_range.1,
        );
        prop.zeta = reflect_into(cur.zeta + scales.t * normal.sample(rng), 1.0, domain.t_max as f64);
        let u: f64 = rng.gen();

        let v = state.sticks.v[k];
        let mut delta = 0.0;
        for &i in &members[k] {
            let p = &data.points[i];
            let w_cur = state.sticks.kernel_weight(k, p);
            let w_prop = crate::kernels::eval(state.sticks.kind, (p.s1, p.s2), p.t as f64, &prop)
                .expect("proposal keeps kernel parameters valid");
            delta += w_prop.ln() - w_cur.ln();
        }
        for &i in &by_component[start[k + 1]..] {
            let p = &data.points[i];
            let w_cur = state.sticks.kernel_weight(k, p);
            let w_prop = crate::kernels::eval(state.sticks.kind, (p.s1, p.s2), p.t as f64, &prop)
                .expect("proposal keeps kernel parameters valid");
            delta += (-w_prop * v).ln_1p() - (-w_cur * v).ln_1p();
        }
        proposed += 1;
        if u.ln() < delta {
            state.sticks.knots[k] = prop;
            accepted += 1;
        }
    }
    (accepted, proposed)
}

/// Allocation log likelihood Σ_i ln π_{c_i}(s_i, t_i) with the Gneiting
/// scaling and interaction overridden, used by the kernel-hyper moves.
fn alloc_loglik_gneiting(state: &LatentState, data: &FitData, gamma: f64, lambda: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..data.len() {
        let p = &data.points[i];
        let ci = state.c[i];
        for k in 0..=ci {
            let knot = &state.sticks.knots[k];
            let w = crate::kernels::gneiting_w((p.s1, p.s2), p.t as f64, knot.psi, knot.zeta, gamma, lambda);
            let frac = w * state.sticks.v[k];
            if k == ci {
                total += frac.ln();
            } else {
                total += (-frac).ln_1p();
            }
        }
    }
    total
}

fn ln_beta_pdf(x: f64, shape1: f64, shape2: f64) -> f64 {
    let ln_b = ln_gamma(shape1) + ln_gamma(shape2) - ln_gamma(shape1 + shape2);
    (shape1 - 1.0) * x.ln() + (shape2 - 1.0) * (-x).ln_1p() - ln_b
}

/// Outcome of one interaction-parameter move.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LambdaStep {
    pub lambda: f64,
    pub jump_accepted: bool,
    pub within_accepted: Option<bool>,
}

/// Two-part spike-and-slab move for λ: a between-model swap λ=0 ↔ λ'~f(λ)
/// accepted with the likelihood ratio times the prior odds ω/(1−ω) (the
/// slab proposal density cancels), then a within-slab reflected random walk
/// when λ > 0.
pub fn lambda_spike_slab_step<R: Rng>(
    lambda: f64,
    omega: f64,
    slab: (f64, f64),
    rw_scale: f64,
    mut loglik: impl FnMut(f64) -> f64,
    rng: &mut R,
) -> LambdaStep {
    let omega = omega.clamp(1e-12, 1.0 - 1e-12);
    let ln_odds = omega.ln() - (-omega).ln_1p();
    let mut lam = lambda;

    let jump_accepted = if lam == 0.0 {
        let prop = Beta::new(slab.0, slab.1)
            .unwrap()
            .sample(rng)
            .clamp(1e-12, 1.0 - 1e-12);
        let delta = loglik(prop) - loglik(0.0) + ln_odds;
        let ok = rng.gen::<f64>().ln() < delta;
        if ok {
            lam = prop;
        }
        ok
    } else {
        let delta = loglik(0.0) - loglik(lam) - ln_odds;
        let ok = rng.gen::<f64>().ln() < delta;
        if ok {
            lam = 0.0;
        }
        ok
    };

    let within_accepted = if lam > 0.0 {
        let step: f64 = Normal::new(0.0, rw_scale.max(1e-300)).unwrap().sample(rng);
        let prop = reflect_into(lam + step, 0.0, 1.0).clamp(1e-12, 1.0 - 1e-12);
        let delta = loglik(prop) + ln_beta_pdf(prop, slab.0, slab.1)
            - loglik(lam)
            - ln_beta_pdf(lam, slab.0, slab.1);
        let ok = rng.gen::<f64>().ln() < delta;
        if ok {
            lam = prop;
        }
        Some(ok)
    } else {
        None
    };

    LambdaStep { lambda: lam, jump_accepted, within_accepted }
}

/// Beta shapes of the slab-weight full conditional given the spike
/// indicator: the slab count grows when λ > 0, the spike count otherwise.
pub fn omega_posterior_shapes(prior: (f64, f64), lambda_positive: bool) -> (f64, f64) {
    (
        prior.0 + if lambda_positive { 1.0 } else { 0.0 },
        prior.1 + if lambda_positive { 0.0 } else { 1.0 },
    )
}

/// Acceptance counters of the kernel-hyper moves.
#[derive(Clone, Copy, Debug, Default)]
pub struct KernelHyperAccepts {
    pub gamma: bool,
    pub lambda_jump: bool,
    pub lambda_within: Option<bool>,
}

/// Joint update of the Gneiting kernel hyperparameters: random-walk MH on γ
/// under its uniform prior, the spike-and-slab move for λ, and a conjugate
/// refresh of the slab weight ω_λ. Requires the Gneiting kernel.
pub fn update_kernel_hyper<R: Rng>(
    state: &mut LatentState,
    data: &FitData,
    hyper: &HyperPriors,
    gamma_scale: f64,
    lambda_scale: f64,
    rng: &mut R,
) -> KernelHyperAccepts {
    debug_assert_eq!(state.sticks.kind, KernelKind::Gneiting);
    let mut accepts = KernelHyperAccepts::default();
    let (gamma, lambda) = (state.gamma(), state.lambda());

    // γ move
    let step: f64 = Normal::new(0.0, gamma_scale.max(1e-300)).unwrap().sample(rng);
    let gamma_prop = reflect_into(gamma + step, hyper.gamma_range.0, hyper.gamma_range.1)
        .max(hyper.gamma_range.0 + 1e-12);
    let cur_ll = alloc_loglik_gneiting(state, data, gamma, lambda);
    let prop_ll = alloc_loglik_gneiting(state, data, gamma_prop, lambda);
    let mut gamma_new = gamma;
    if rng.gen::<f64>().ln() < prop_ll - cur_ll {
        gamma_new = gamma_prop;
        accepts.gamma = true;
    }
    state.set_gamma(gamma_new);

    // λ spike-and-slab
    let step = lambda_spike_slab_step(
        lambda,
        state.omega_lambda,
        hyper.lambda_slab,
        lambda_scale,
        |lam| alloc_loglik_gneiting(state, data, gamma_new, lam),
        rng,
    );
    accepts.lambda_jump = step.jump_accepted;
    accepts.lambda_within = step.within_accepted;
    state.set_lambda(step.lambda);

    // ω_λ conjugate refresh
    let (s1, s2) = omega_posterior_shapes(hyper.omega_lambda_prior, step.lambda > 0.0);
    state.omega_lambda = Beta::new(s1, s2).unwrap().sample(rng).clamp(1e-12, 1.0 - 1e-12);
    accepts
}

/// Conjugate normal posterior for a component mean: precision
/// n/v + 1/τ², mean precision-weighted between the residual sum and the
/// base mean. Returns (mean, variance).
pub fn normal_posterior(sum: f64, n: usize, like_var: f64, prior_mean: f64, prior_var: f64) -> (f64, f64) {
    let prec = n as f64 / like_var + 1.0 / prior_var;
    let mean = (sum / like_var + prior_mean / prior_var) / prec;
    (mean, 1.0 / prec)
}

pub fn sample_inverse_gamma<R: Rng>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0 / rate).unwrap().sample(rng);
    1.0 / g.max(1e-300)
}

/// Conjugate refresh of component means and variances. Empty components
/// draw from their priors; occupied components use the precision-weighted
/// normal for μ_k (likelihood variance σ²_k + σ²_ε) and the inverse-gamma
/// full conditional for σ²_k under the fixed-variance-split convention.
pub fn update_atoms<R: Rng>(state: &mut LatentState, data: &FitData, hyper: &HyperPriors, rng: &mut R) {
    let m = state.sticks.truncation();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..data.len() {
        members[state.c[i]].push(i);
    }
    for k in 0..m {
        if members[k].is_empty() {
            state.mu[k] = Normal::new(hyper.base_mean, hyper.base_var.sqrt()).unwrap().sample(rng);
            state.sigma2[k] = sample_inverse_gamma(hyper.atom_var_shape, hyper.atom_var_rate, rng);
            continue;
        }
        let n_k = members[k].len();
        let sum: f64 = members[k].iter().map(|&i| data.residual(i, &state.beta)).sum();
        let like_var = state.sigma2[k] + state.sigma2_eps;
        let (mean, var) = normal_posterior(sum, n_k, like_var, hyper.base_mean, hyper.base_var);
        state.mu[k] = Normal::new(mean, var.sqrt()).unwrap().sample(rng);
        let ss: f64 = members[k]
            .iter()
            .map(|&i| {
                let r = data.residual(i, &state.beta) - state.mu[k];
                r * r
            })
            .sum();
        state.sigma2[k] =
            sample_inverse_gamma(hyper.atom_var_shape + n_k as f64 / 2.0, hyper.atom_var_rate + 0.5 * ss, rng);
    }
}

/// Inverse-gamma shape and rate of the noise full conditional.
pub fn sigma_eps_posterior(noise_shape: f64, noise_rate: f64, n: usize, rss: f64) -> (f64, f64) {
    (noise_shape + n as f64 / 2.0, noise_rate + 0.5 * rss)
}

/// Posterior mean and covariance factor of the regression block under a
/// Normal(0, 10⁶ I) prior, weighted by per-observation variances. Returns
/// the coefficient draw.
fn sample_beta_wls<R: Rng>(
    xs: &[Vec<f64>],
    targets: &[f64],
    weights: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let p = xs[0].len();
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for ((x, &t), &w) in xs.iter().zip(targets).zip(weights) {
        for r in 0..p {
            for c in 0..p {
                a[(r, c)] += x[r] * x[c] / w;
            }
            rhs[r] += x[r] * t / w;
        }
    }
    for r in 0..p {
        a[(r, r)] += 1e-6; // Normal(0, 1e6 I) prior precision
    }
    let chol = nalgebra::Cholesky::new(a).expect("WLS normal equations are positive definite");
    let mean = chol.solve(&rhs);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let z = DVector::from_fn(p, |_, _| normal.sample(rng));
    // Cov = (LLᵀ)⁻¹, so β = mean + L⁻ᵀ z
    let l = chol.l();
    let w = l.transpose().solve_upper_triangular(&z).expect("triangular solve");
    (0..p).map(|i| mean[i] + w[i]).collect()
}

/// Conjugate refresh of the observation noise, then (when covariates are
/// present) of the regression coefficients from their normal full
/// conditional with per-observation variance σ²_{c_i} + σ²_ε.
pub fn update_noise_regression<R: Rng>(
    state: &mut LatentState,
    data: &FitData,
    hyper: &HyperPriors,
    rng: &mut R,
) {
    let rss: f64 = (0..data.len())
        .map(|i| {
            let r = data.residual(i, &state.beta) - state.mu[state.c[i]];
            r * r
        })
        .sum();
    let (shape, rate) = sigma_eps_posterior(hyper.noise_shape, hyper.noise_rate, data.len(), rss);
    state.sigma2_eps = sample_inverse_gamma(shape, rate, rng);

    if let Some(xs) = &data.x {
        let targets: Vec<f64> = (0..data.len()).map(|i| data.y[i] - state.mu[state.c[i]]).collect();
        let weights: Vec<f64> =
            (0..data.len()).map(|i| state.sigma2[state.c[i]] + state.sigma2_eps).collect();
        state.beta = sample_beta_wls(xs, &targets, &weights, rng);
    }
}

/// Joint random-walk move on the beta-stick shapes (a, b), reflected at the
/// prior interval bounds, targeting Π_k Beta(V_k; a, b). Returns whether
/// the proposal was accepted.
pub fn update_shape_hyper<R: Rng>(
    state: &mut LatentState,
    hyper: &HyperPriors,
    scale_a: f64,
    scale_b: f64,
    rng: &mut R,
) -> bool {
    let (a, b) = (state.sticks.a, state.sticks.b);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let a_prop = reflect_into(a + scale_a * normal.sample(rng), hyper.a_range.0, hyper.a_range.1)
        .max(hyper.a_range.0 + 1e-6);
    let b_prop = reflect_into(b + scale_b * normal.sample(rng), hyper.b_range.0, hyper.b_range.1)
        .max(hyper.b_range.0 + 1e-6);
    let u: f64 = rng.gen();
    let delta: f64 = state
        .sticks
        .v
        .iter()
        .map(|&v| ln_beta_pdf(v, a_prop, b_prop) - ln_beta_pdf(v, a, b))
        .sum();
    if u.ln() < delta {
        state.sticks.a = a_prop;
        state.sticks.b = b_prop;
        true
    } else {
        false
    }
}

/// Pólya-urn allocation probabilities marginalized over within-component
/// atom choices, used by the varying-atoms sampler.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnAllocation {
    /// p_{i0}: fresh atom inside an occupied component.
    pub new_atom_occupied: f64,
    /// p_{ik} per slot (zero for unoccupied slots).
    pub existing: Vec<f64>,
    /// p_{i,K+1}: atom of a brand-new component.
    pub new_component: f64,
}

impl UrnAllocation {
    /// Total probability of drawing a fresh atom from the base distribution.
    pub fn fresh_mass(&self) -> f64 {
        self.new_atom_occupied + self.new_component
    }
}

/// Implements the urn weights w_{ikj} = 1/(α + |S_k|), w_{ik0} = α/(α + |S_k|)
/// multiplied by the stick weights π_{ik} and the likelihood factors, then
/// normalized.
///
/// `counts[k]` excludes the subject being reallocated; `g_existing[k]` is
/// the likelihood of the subject's response under slot k's current atom
/// (only occupied entries are read); `g_base` is the prior-predictive
/// likelihood g₀(y_i). One atom per component is maintained, so the
/// within-component sum over atoms collapses to n_k shared-atom terms.
pub fn urn_allocation_probs(
    pi: &[f64],
    counts: &[usize],
    alpha: f64,
    g_existing: &[f64],
    g_base: f64,
) -> UrnAllocation {
    assert_eq!(pi.len(), counts.len());
    assert_eq!(pi.len(), g_existing.len());
    let mut new_atom_occupied = 0.0;
    let mut new_component = 0.0;
    let mut existing = vec![0.0; pi.len()];
    for k in 0..pi.len() {
        if counts[k] > 0 {
            let nk = counts[k] as f64;
            existing[k] = pi[k] * (nk / (alpha + nk)) * g_existing[k];
            new_atom_occupied += pi[k] * (alpha / (alpha + nk)) * g_base;
        } else {
            new_component += pi[k] * g_base; // w_{ik0} = α/α = 1
        }
    }
    let total = new_atom_occupied + new_component + existing.iter().sum::<f64>();
    if total > 0.0 && total.is_finite() {
        new_atom_occupied /= total;
        new_component /= total;
        for e in &mut existing {
            *e /= total;
        }
    }
    UrnAllocation { new_atom_occupied, existing, new_component }
}
