//! Small numeric helpers shared across the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Numerically stable log(sum(exp(x))) over a slice.
///
/// Returns `f64::NEG_INFINITY` for an empty slice or when every entry is
/// negative infinity.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Derives an independent generator stream from a base seed and a task index.
///
/// Used to shard Monte Carlo loops: results are identical whether tasks run
/// sequentially or in parallel, because each task owns its own stream.
pub fn substream(base: u64, index: u64) -> ChaCha8Rng {
    // splitmix-style mixing so that consecutive indices decorrelate
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningMoments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n − 1 denominator); 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    /// Merges another accumulator, as if its samples were pushed after ours.
    pub fn merge(&mut self, other: &RunningMoments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }
}

/// Log density of a normal distribution with the given mean and variance.
#[inline]
pub fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (var * 2.0 * std::f64::consts::PI).ln() - 0.5 * d * d / var
}

/// Draws a categorical index from unnormalized log-probabilities.
///
/// Consumes exactly one uniform variate so callers can reason about stream
/// alignment. Returns `None` if every entry is −∞.
pub fn sample_categorical_log<R: Rng>(rng: &mut R, log_probs: &[f64]) -> Option<usize> {
    let z = logsumexp(log_probs);
    if !z.is_finite() {
        return None;
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (k, &lp) in log_probs.iter().enumerate() {
        let p = (lp - z).exp();
        if p > 0.0 {
            last_valid = k;
        }
        acc += p;
        if u <= acc && p > 0.0 {
            return Some(k);
        }
    }
    Some(last_valid)
}

/// Draws a categorical index from unnormalized nonnegative weights.
pub fn sample_categorical<R: Rng>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_valid = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_valid = k;
        }
        acc += w;
        if u <= acc && w > 0.0 {
            return Some(k);
        }
    }
    Some(last_valid)
}

/// Cholesky factor of a covariance matrix, escalating a diagonal jitter
/// three times (×10 each) before giving up.
pub(crate) fn cholesky_with_jitter(
    mut cov: nalgebra::DMatrix<f64>,
    base_jitter: f64,
) -> Option<nalgebra::DMatrix<f64>> {
    let n = cov.nrows();
    let mut jitter = base_jitter;
    for attempt in 0..4 {
        if attempt > 0 {
            for i in 0..n {
                cov[(i, i)] += jitter;
            }
            jitter *= 10.0;
        }
        if let Some(chol) = nalgebra::Cholesky::new(cov.clone()) {
            return Some(chol.unpack());
        }
    }
    None
}

/// Reflects `x` into the closed interval `[lo, hi]`.
pub fn reflect_into(mut x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(hi > lo);
    let width = hi - lo;
    // map into a double-width sawtooth, then fold
    let mut offset = (x - lo) % (2.0 * width);
    if offset < 0.0 {
        offset += 2.0 * width;
    }
    x = if offset <= width { lo + offset } else { lo + 2.0 * width - offset };
    x.clamp(lo, hi)
}
