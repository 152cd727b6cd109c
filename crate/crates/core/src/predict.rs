//! Posterior predictive computation at held-out space-time points, squared
//! prediction error scoring, residual tables, and predictive density curves.

use crate::data::SpaceTimePoint;
use crate::mcmc::ChainTrace;
use crate::stickbreak;
use crate::util::{ln_normal_pdf, sample_categorical, substream};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PredictError {
    #[error("posterior_predictive: trace holds no kept iterations")]
    EmptyTrace,
    #[error("covariates disagree with the fit: {0}")]
    CovariateMismatch(String),
    #[error("{0}: prediction and truth lengths differ")]
    LengthMismatch(&'static str),
    #[error("predictive_density: y grid must be sorted and non-empty")]
    UnsortedGrid,
    #[error("varying-atoms trace is missing its training-point factorization")]
    BadVaTrace,
}

/// Per-point posterior predictive summaries.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult {
    pub points: Vec<SpaceTimePoint>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// (q05, q50, q95) per point from per-iteration mixture draws.
    pub quantiles: Vec<[f64; 3]>,
}

/// Mean and second moment of a finite Gaussian mixture. Symmetric in the
/// component order.
pub(crate) fn mixture_moments(weights: &[f64], means: &[f64], vars: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for ((&w, &m), &v) in weights.iter().zip(means).zip(vars) {
        mean += w * m;
        second += w * (m * m + v);
    }
    (mean, second)
}

/// Fresh-component draw standing in for the truncation tail of one kept
/// iteration: an atom from the base distribution and a variance from the
/// atom-variance prior.
#[derive(Clone, Copy, Debug)]
struct FreshComponent {
    atom: f64,
    var: f64,
}

fn fresh_components(trace: &ChainTrace, seed: u64) -> Vec<FreshComponent> {
    trace
        .records
        .iter()
        .enumerate()
        .map(|(r, _)| {
            let mut rng = substream(seed, r as u64);
            let atom = Normal::new(trace.base_mean, trace.base_var.sqrt()).unwrap().sample(&mut rng);
            let var = if trace.varying_atoms {
                trace.gp.map(|g| g.var).unwrap_or(trace.base_var)
            } else {
                crate::mcmc::sample_inverse_gamma(trace.atom_var_shape, trace.atom_var_rate, &mut rng)
            };
            FreshComponent { atom, var }
        })
        .collect()
}

/// Conditioning workspace for varying-atoms traces: the Cholesky factor of
/// the training-point covariance, reused across components and records.
struct VaPredictor {
    chol: DMatrix<f64>,
    train: Vec<SpaceTimePoint>,
    gp: crate::config::GpParams,
    base_mean: f64,
}

impl VaPredictor {
    fn build(trace: &ChainTrace) -> Result<Option<Self>, PredictError> {
        if !trace.varying_atoms {
            return Ok(None);
        }
        let train = trace.train_points.clone().ok_or(PredictError::BadVaTrace)?;
        let gp = trace.gp.ok_or(PredictError::BadVaTrace)?;
        let n = train.len();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            crate::gp_atoms::product_covariance(&train[i], &train[j], gp.decay, gp.rho, gp.var)
        });
        let chol = crate::util::cholesky_with_jitter(cov, 1e-8 * gp.var)
            .ok_or(PredictError::BadVaTrace)?;
        Ok(Some(Self { chol, train, gp, base_mean: trace.base_mean }))
    }

    /// Conditioning weights α = K⁻¹ k(·, p) and the conditional variance at
    /// the new point.
    fn conditioning(&self, p: &SpaceTimePoint) -> (DVector<f64>, f64) {
        let n = self.train.len();
        let k_star = DVector::from_fn(n, |i, _| {
            crate::gp_atoms::product_covariance(&self.train[i], p, self.gp.decay, self.gp.rho, self.gp.var)
        });
        let lower = self
            .chol
            .solve_lower_triangular(&k_star)
            .expect("triangular factor is invertible");
        let alpha = self
            .chol
            .transpose()
            .solve_upper_triangular(&lower)
            .expect("triangular factor is invertible");
        let cond_var = (self.gp.var - k_star.dot(&alpha)).max(0.0);
        (alpha, cond_var)
    }
}

fn check_covariates(
    trace: &ChainTrace,
    n_points: usize,
    covariates: Option<&[Vec<f64>]>,
) -> Result<(), PredictError> {
    match (trace.covariate_dim, covariates) {
        (0, None) => Ok(()),
        (0, Some(_)) => Err(PredictError::CovariateMismatch(
            "fit used no covariates but covariates were supplied".into(),
        )),
        (p, None) => Err(PredictError::CovariateMismatch(format!(
            "fit used {p} covariates but none were supplied"
        ))),
        (p, Some(xs)) => {
            if xs.len() != n_points {
                return Err(PredictError::CovariateMismatch(format!(
                    "{} covariate rows for {} points",
                    xs.len(),
                    n_points
                )));
            }
            if let Some(bad) = xs.iter().find(|x| x.len() != p) {
                return Err(PredictError::CovariateMismatch(format!(
                    "covariate row of length {} against fit dimension {p}",
                    bad.len()
                )));
            }
            Ok(())
        }
    }
}

/// Posterior predictive mean, standard deviation, and quantiles at new
/// points: per kept iteration the stick weights are rebuilt at the point,
/// renormalized together with the truncation remainder, and the remainder
/// mass is assigned to a fresh base-distribution component.
///
/// Per-point work shards over deterministic substreams of `seed`, so the
/// result does not depend on the thread count.
pub fn posterior_predictive(
    trace: &ChainTrace,
    points: &[SpaceTimePoint],
    covariates: Option<&[Vec<f64>]>,
    seed: u64,
) -> Result<PredictionResult, PredictError> {
    if trace.records.is_empty() {
        return Err(PredictError::EmptyTrace);
    }
    check_covariates(trace, points.len(), covariates)?;
    let fresh = fresh_components(trace, seed);
    let va = VaPredictor::build(trace)?;
    let sticks: Vec<stickbreak::StickState> =
        trace.records.iter().map(|r| trace.stick_state(r)).collect();

    let rows: Vec<(f64, f64, [f64; 3])> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = &points[i];
            let va_cond = va.as_ref().map(|v| v.conditioning(p));
            let m = trace.truncation;
            let mut mean_acc = 0.0;
            let mut second_acc = 0.0;
            let mut draws: Vec<f64> = Vec::with_capacity(trace.records.len());
            let mut weights = vec![0.0; m + 1];
            let mut means = vec![0.0; m + 1];
            let mut vars = vec![0.0; m + 1];
            for (r, record) in trace.records.iter().enumerate() {
                let x_shift = match covariates {
                    Some(xs) => xs[i].iter().zip(&record.beta).map(|(a, b)| a * b).sum::<f64>(),
                    None => 0.0,
                };
                let (pi, rem) = stickbreak::compute_weights(&sticks[r], p);
                let total: f64 = pi.iter().sum::<f64>() + rem;
                for k in 0..m {
                    weights[k] = pi[k] / total;
                }
                weights[m] = rem / total;
                match (&va_cond, record.atoms.as_ref()) {
                    (Some((alpha, cond_var)), Some(atoms)) => {
                        let va_ref = va.as_ref().unwrap();
                        for k in 0..m {
                            let centered: f64 = (0..alpha.len())
                                .map(|j| alpha[j] * (atoms[k][j] - va_ref.base_mean))
                                .sum();
                            means[k] = va_ref.base_mean + centered + x_shift;
                            vars[k] = cond_var + record.sigma2_eps;
                        }
                    }
                    _ => {
                        for k in 0..m {
                            means[k] = record.mu[k] + x_shift;
                            vars[k] = record.sigma2[k] + record.sigma2_eps;
                        }
                    }
                }
                means[m] = fresh[r].atom + x_shift;
                vars[m] = fresh[r].var + record.sigma2_eps;
                let (mean_r, second_r) = mixture_moments(&weights, &means, &vars);
                mean_acc += mean_r;
                second_acc += second_r;

                let mut rng = substream(seed ^ 0x9D89_5A4B_1F0E_2C3D, (r * points.len() + i) as u64);
                let k = sample_categorical(&mut rng, &weights).unwrap_or(m);
                draws.push(means[k] + vars[k].sqrt() * Normal::new(0.0, 1.0).unwrap().sample(&mut rng));
            }
            let n_rec = trace.records.len() as f64;
            let mean = mean_acc / n_rec;
            let var = (second_acc / n_rec - mean * mean).max(0.0);
            draws.sort_by(f64::total_cmp);
            let q = |p: f64| -> f64 {
                let pos = p * (draws.len() - 1) as f64;
                let lo = pos.floor() as usize;
                let hi = pos.ceil() as usize;
                let w = pos - lo as f64;
                draws[lo] * (1.0 - w) + draws[hi] * w
            };
            (mean, var.sqrt(), [q(0.05), q(0.50), q(0.95)])
        })
        .collect();

    Ok(PredictionResult {
        points: points.to_vec(),
        mean: rows.iter().map(|r| r.0).collect(),
        sd: rows.iter().map(|r| r.1).collect(),
        quantiles: rows.iter().map(|r| r.2).collect(),
    })
}

/// Squared prediction error in both conventions: the raw sum over points
/// and the per-point mean.
pub fn espe(pred: &PredictionResult, truth: &[f64]) -> Result<(f64, f64), PredictError> {
    espe_values(&pred.mean, truth)
}

/// [`espe`] on bare prediction means.
pub fn espe_values(pred_mean: &[f64], truth: &[f64]) -> Result<(f64, f64), PredictError> {
    if pred_mean.len() != truth.len() || pred_mean.is_empty() {
        return Err(PredictError::LengthMismatch("espe"));
    }
    let sum: f64 = pred_mean.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum, sum / pred_mean.len() as f64))
}

/// One row of a residual table: a location, a time key (the raw index, or
/// the window start when aggregating), and the squared residual.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow {
    pub s1: f64,
    pub s2: f64,
    pub t_key: u32,
    pub value: f64,
}

/// Per-point squared residuals, optionally averaged per location over
/// consecutive time windows of the given length.
pub fn residual_map(
    pred_mean: &[f64],
    truth: &[f64],
    points: &[SpaceTimePoint],
    window: Option<u32>,
) -> Result<Vec<ResidualRow>, PredictError> {
    if pred_mean.len() != truth.len() || pred_mean.len() != points.len() {
        return Err(PredictError::LengthMismatch("residual_map"));
    }
    match window {
        None | Some(1) => Ok(points
            .iter()
            .zip(pred_mean.iter().zip(truth))
            .map(|(p, (m, t))| ResidualRow { s1: p.s1, s2: p.s2, t_key: p.t, value: (m - t) * (m - t) })
            .collect()),
        Some(w) => {
            let mut groups: std::collections::BTreeMap<(u64, u64, u32), (f64, usize)> =
                std::collections::BTreeMap::new();
            for (p, (m, t)) in points.iter().zip(pred_mean.iter().zip(truth)) {
                let window_start = ((p.t - 1) / w) * w + 1;
                let key = (p.s1.to_bits(), p.s2.to_bits(), window_start);
                let entry = groups.entry(key).or_insert((0.0, 0));
                entry.0 += (m - t) * (m - t);
                entry.1 += 1;
            }
            Ok(groups
                .into_iter()
                .map(|((b1, b2, t_key), (sum, count))| ResidualRow {
                    s1: f64::from_bits(b1),
                    s2: f64::from_bits(b2),
                    t_key,
                    value: sum / count as f64,
                })
                .collect())
        }
    }
}

/// Posterior-mean mixture density over a sorted response grid.
pub fn predictive_density(
    trace: &ChainTrace,
    point: &SpaceTimePoint,
    y_grid: &[f64],
    seed: u64,
) -> Result<Vec<f64>, PredictError> {
    if trace.records.is_empty() {
        return Err(PredictError::EmptyTrace);
    }
    if y_grid.is_empty() || y_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(PredictError::UnsortedGrid);
    }
    if trace.covariate_dim != 0 {
        return Err(PredictError::CovariateMismatch(
            "predictive_density supports covariate-free fits only".into(),
        ));
    }
    let fresh = fresh_components(trace, seed);
    let va = VaPredictor::build(trace)?;
    let va_cond = va.as_ref().map(|v| v.conditioning(point));
    let m = trace.truncation;
    let mut density = vec![0.0; y_grid.len()];
    for (r, record) in trace.records.iter().enumerate() {
        let sticks = trace.stick_state(record);
        let (pi, rem) = stickbreak::compute_weights(&sticks, point);
        let total: f64 = pi.iter().sum::<f64>() + rem;
        let mut means = vec![0.0; m + 1];
        let mut vars = vec![0.0; m + 1];
        match (&va_cond, record.atoms.as_ref()) {
            (Some((alpha, cond_var)), Some(atoms)) => {
                let va_ref = va.as_ref().unwrap();
                for k in 0..m {
                    let centered: f64 =
                        (0..alpha.len()).map(|j| alpha[j] * (atoms[k][j] - va_ref.base_mean)).sum();
                    means[k] = va_ref.base_mean + centered;
                    vars[k] = cond_var + record.sigma2_eps;
                }
            }
            _ => {
                for k in 0..m {
                    means[k] = record.mu[k];
                    vars[k] = record.sigma2[k] + record.sigma2_eps;
                }
            }
        }
        means[m] = fresh[r].atom;
        vars[m] = fresh[r].var + record.sigma2_eps;
        for (g, &y) in y_grid.iter().enumerate() {
            let mut d = 0.0;
            for k in 0..=m {
                let w = if k < m { pi[k] } else { rem } / total;
                if w > 0.0 {
                    d += w * ln_normal_pdf(y, means[k], vars[k]).exp();
                }
            }
            density[g] += d;
        }
    }
    let n_rec = trace.records.len() as f64;
    for d in &mut density {
        *d /= n_rec;
    }
    Ok(density)
}
