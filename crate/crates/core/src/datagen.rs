//! Synthetic location and field generators for the simulation studies:
//! Thomas-process station layouts, six stationary/non-separable covariance
//! models, and the regime-switching temporal scenario.

use crate::data::{Dataset, Observation, SpaceTimeDomain, SpaceTimePoint};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DatagenError {
    #[error("thomas_process: realization produced zero daughter points")]
    EmptyRealization,
    #[error("simulate_field: covariance factorization failed after jitter escalation")]
    FactorizationFailure,
    #[error("cov_value: unsupported parameters: {0}")]
    UnsupportedParams(String),
}

/// Covariance model of a synthetic random field.
///
/// Models 1–4 are purely spatial (time enters only through how the caller
/// replicates or redraws fields); the last two couple space and time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovModelSpec {
    /// τ² exp(−‖s−s'‖²/h).
    GaussianCov { tau2: f64, h: f64 },
    /// τ² exp(−‖s−s'‖/h) plus a nugget, with a constant trend mean.
    ExpNuggetTrend { tau2: f64, h: f64, nugget: f64, trend_mean: f64 },
    /// Stable family τ² exp(−‖s−s'‖^α/h), α ∈ (0, 2].
    Stable { tau2: f64, h: f64, alpha: f64 },
    /// Nugget plus a zonally anisotropic Gaussian: one axis range is
    /// stretched by a factor of 5.
    ZonalAnisotropyNugget { tau2: f64, h: f64, nugget: f64, long_axis: usize },
    /// Non-separable space-time model built from Whittle–Matérn shells
    /// (ν = 1.5) with a directional space-time drift term.
    Stein { nu: f64 },
    /// Space-isotropic non-separable model
    /// (|Δt|+1)^{-d/2} exp(−‖Δs‖²/(|Δt|+1)) with d = 2.
    NonSeparable,
}

impl CovModelSpec {
    /// Whether the model couples time into the covariance.
    pub fn is_spacetime(&self) -> bool {
        matches!(self, CovModelSpec::Stein { .. } | CovModelSpec::NonSeparable)
    }

    /// Constant mean of the generated field.
    pub fn mean(&self) -> f64 {
        match self {
            CovModelSpec::ExpNuggetTrend { trend_mean, .. } => *trend_mean,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |msg: String| Err(DatagenError::UnsupportedParams(msg));
        match *self {
            CovModelSpec::GaussianCov { tau2, h } if tau2 <= 0.0 || h <= 0.0 => {
                bad(format!("gaussian needs tau2 > 0, h > 0, got {tau2}, {h}"))
            }
            CovModelSpec::ExpNuggetTrend { tau2, h, nugget, .. }
                if tau2 <= 0.0 || h <= 0.0 || nugget < 0.0 =>
            {
                bad("exponential model needs tau2 > 0, h > 0, nugget >= 0".into())
            }
            CovModelSpec::Stable { tau2, h, alpha }
                if tau2 <= 0.0 || h <= 0.0 || !(0.0 < alpha && alpha <= 2.0) =>
            {
                bad(format!("stable model needs alpha in (0, 2], got {alpha}"))
            }
            CovModelSpec::ZonalAnisotropyNugget { tau2, h, nugget, long_axis }
                if tau2 <= 0.0 || h <= 0.0 || nugget < 0.0 || long_axis > 1 =>
            {
                bad("anisotropy model needs tau2 > 0, h > 0, nugget >= 0, axis 0|1".into())
            }
            CovModelSpec::Stein { nu } if nu != 1.5 => {
                bad(format!("stein model is pinned to nu = 1.5, got {nu}"))
            }
            _ => Ok(()),
        }
    }
}

/// Whittle–Matérn correlation, unit scale, W_ν(0) = 1, for the two orders
/// the Stein model needs.
fn whittle_matern(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return 1.0;
    }
    if nu == 1.5 {
        (1.0 + z) * (-z).exp()
    } else {
        // nu == 0.5
        (-z).exp()
    }
}

/// Reference direction of the Stein model's space-time drift term.
const STEIN_REFERENCE: (f64, f64) = (0.9, 0.1);

/// Covariance between two space-time points under the given model.
pub fn cov_value(spec: &CovModelSpec, p: &SpaceTimePoint, q: &SpaceTimePoint) -> f64 {
    let same_site = p.s1 == q.s1 && p.s2 == q.s2;
    let d = p.spatial_distance(q);
    match *spec {
        CovModelSpec::GaussianCov { tau2, h } => tau2 * (-d * d / h).exp(),
        CovModelSpec::ExpNuggetTrend { tau2, h, nugget, .. } => {
            tau2 * (-d / h).exp() + if same_site { nugget } else { 0.0 }
        }
        CovModelSpec::Stable { tau2, h, alpha } => tau2 * (-d.powf(alpha) / h).exp(),
        CovModelSpec::ZonalAnisotropyNugget { tau2, h, nugget, long_axis } => {
            let (d1, d2) = (p.s1 - q.s1, p.s2 - q.s2);
            let (h1, h2) = if long_axis == 0 { (5.0 * h, h) } else { (h, 5.0 * h) };
            tau2 * (-(d1 * d1 / (h1 * h1) + d2 * d2 / (h2 * h2))).exp()
                + if same_site { nugget } else { 0.0 }
        }
        CovModelSpec::Stein { nu } => {
            let dt = p.t as f64 - q.t as f64;
            let z = (d * d + dt * dt).sqrt();
            let lag = (p.s1 - q.s1, p.s2 - q.s2);
            let dot = lag.0 * STEIN_REFERENCE.0 + lag.1 * STEIN_REFERENCE.1;
            let dim = 2.0;
            whittle_matern(nu, z)
                - dot * dt / ((nu - 1.0) * (2.0 * nu + dim)) * whittle_matern(nu - 1.0, z)
        }
        CovModelSpec::NonSeparable => {
            let psi = (p.t as f64 - q.t as f64).abs();
            (psi + 1.0).powf(-1.0) * (-d * d / (psi + 1.0)).exp()
        }
    }
}

/// Daughter points of a Thomas cluster process on the spatial window of the
/// domain: Poisson(ω·area) parents uniform in the window, each spawning
/// Poisson(δ) daughters uniform in a disk of the given radius. Daughters
/// are clipped (clamped) back into the window so the expected count stays
/// ω·area·δ.
pub fn thomas_process<R: Rng>(
    omega: f64,
    delta: f64,
    radius: f64,
    window: &SpaceTimeDomain,
    rng: &mut R,
) -> Result<Vec<(f64, f64)>, DatagenError> {
    assert!(omega > 0.0 && delta > 0.0 && radius > 0.0);
    let (x0, x1) = window.s1_range;
    let (y0, y1) = window.s2_range;
    let area = (x1 - x0) * (y1 - y0);
    let n_parents = Poisson::new(omega * area).unwrap().sample(rng) as usize;
    let mut daughters = Vec::new();
    for _ in 0..n_parents {
        let px = rng.gen_range(x0..=x1);
        let py = rng.gen_range(y0..=y1);
        let n_kids = Poisson::new(delta).unwrap().sample(rng) as usize;
        for _ in 0..n_kids {
            // uniform in the disk via radius-sqrt sampling
            let r = radius * rng.gen::<f64>().sqrt();
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let dx = px + r * angle.cos();
            let dy = py + r * angle.sin();
            daughters.push((dx.clamp(x0, x1), dy.clamp(y0, y1)));
        }
    }
    if daughters.is_empty() {
        return Err(DatagenError::EmptyRealization);
    }
    Ok(daughters)
}

fn cholesky_with_jitter(cov: DMatrix<f64>, base_jitter: f64) -> Result<DMatrix<f64>, DatagenError> {
    crate::util::cholesky_with_jitter(cov, base_jitter).ok_or(DatagenError::FactorizationFailure)
}

/// One multivariate-normal field draw over the given points: mean from the
/// model (0, or the trend for the exponential model), covariance from
/// [`cov_value`].
pub fn simulate_field<R: Rng>(
    spec: &CovModelSpec,
    points: &[SpaceTimePoint],
    rng: &mut R,
) -> Result<Vec<f64>, DatagenError> {
    spec.validate()?;
    let n = points.len();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = cov_value(spec, &points[i], &points[j]);
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let total_var = cov_value(spec, &points[0], &points[0]);
    let l = cholesky_with_jitter(cov, 1e-10 * total_var.max(1.0))?;
    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let z = DMatrix::from_fn(n, 1, |_, _| std_normal.sample(rng));
    let draw = l * z;
    let mean = spec.mean();
    Ok((0..n).map(|i| mean + draw[(i, 0)]).collect())
}

/// How purely spatial models are replicated over the time grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeMode {
    /// One spatial field, copied to every time point.
    Replicate,
    /// Independent spatial field per time point.
    Redraw,
}

impl TimeMode {
    pub fn name(&self) -> &'static str {
        match self {
            TimeMode::Replicate => "replicate",
            TimeMode::Redraw => "redraw",
        }
    }
}

/// Simulates a dataset over fixed locations and the time grid `1..=t_max`.
///
/// Space-time models draw one joint field over all (location, time) pairs;
/// purely spatial models follow `mode`.
pub fn simulate_spacetime<R: Rng>(
    spec: &CovModelSpec,
    locations: &[(f64, f64)],
    t_max: u32,
    mode: TimeMode,
    rng: &mut R,
) -> Result<Dataset, DatagenError> {
    assert!(!locations.is_empty() && t_max >= 1);
    let mut observations = Vec::with_capacity(locations.len() * t_max as usize);
    if spec.is_spacetime() {
        let points: Vec<SpaceTimePoint> = (1..=t_max)
            .flat_map(|t| locations.iter().map(move |&(x, y)| SpaceTimePoint::new(x, y, t)))
            .collect();
        let values = simulate_field(spec, &points, rng)?;
        for (p, y) in points.into_iter().zip(values) {
            observations.push(Observation::new(p, y));
        }
    } else {
        match mode {
            TimeMode::Replicate => {
                let points: Vec<SpaceTimePoint> =
                    locations.iter().map(|&(x, y)| SpaceTimePoint::new(x, y, 1)).collect();
                let values = simulate_field(spec, &points, rng)?;
                for t in 1..=t_max {
                    for (&(x, y), &v) in locations.iter().zip(&values) {
                        observations.push(Observation::new(SpaceTimePoint::new(x, y, t), v));
                    }
                }
            }
            TimeMode::Redraw => {
                for t in 1..=t_max {
                    let points: Vec<SpaceTimePoint> =
                        locations.iter().map(|&(x, y)| SpaceTimePoint::new(x, y, t)).collect();
                    let values = simulate_field(spec, &points, rng)?;
                    for (p, y) in points.into_iter().zip(values) {
                        observations.push(Observation::new(p, y));
                    }
                }
            }
        }
    }
    Ok(Dataset::new(observations))
}

/// Deterministic temporal trend of the regime-switching scenario:
/// f(t) = cos t + 2 sin t + t/2 − min(t, 16).
pub fn regime_trend(t: f64) -> f64 {
    t.cos() + 2.0 * t.sin() + t / 2.0 - t.min(16.0)
}

pub(crate) const REGIME2_WEIGHTS: (f64, f64) = (0.3, 0.7);
const REGIME_VAR: (f64, f64, f64) = (0.04, 1.0, 0.09);

/// Draws the regime-2 mixture indicator: 0 with probability 0.3, 1 with 0.7.
pub(crate) fn regime2_component<R: Rng>(rng: &mut R) -> usize {
    if rng.gen::<f64>() < REGIME2_WEIGHTS.0 {
        0
    } else {
        1
    }
}

/// Regime-switching scenario on the unit square: `n_per_t` fixed stations,
/// time grid `1..=t_max`, spatially correlated fields whose per-observation
/// mixture component selects the regime variance (and, for t ≥ 16, a
/// shifted center).
///
/// Regimes: single component for 1 ≤ t < 8; a (0.3, 0.7) variance mixture
/// for 8 ≤ t < 16; an equal two-center mixture for t ≥ 16.
pub fn scenario_regime<R: Rng>(
    n_per_t: usize,
    t_max: u32,
    rho_lengthscale: f64,
    rng: &mut R,
) -> Result<Dataset, DatagenError> {
    assert!(n_per_t >= 1 && t_max >= 1 && rho_lengthscale > 0.0);
    let locations: Vec<(f64, f64)> =
        (0..n_per_t).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();

    // unit-variance spatial correlation factor, shared by all regimes
    let n = n_per_t;
    let mut corr = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let d1 = locations[i].0 - locations[j].0;
            let d2 = locations[i].1 - locations[j].1;
            let c = (-(d1 * d1 + d2 * d2) / (rho_lengthscale * rho_lengthscale)).exp();
            corr[(i, j)] = c;
            corr[(j, i)] = c;
        }
    }
    let l = cholesky_with_jitter(corr, 1e-10)?;
    let std_normal = Normal::new(0.0, 1.0).unwrap();

    let mut observations = Vec::with_capacity(n * t_max as usize);
    for t in 1..=t_max {
        let tf = t as f64;
        let z = DMatrix::from_fn(n, 1, |_, _| std_normal.sample(rng));
        let field = &l * z;
        for (i, &(x, y)) in locations.iter().enumerate() {
            let (center, sd) = if t < 8 {
                (regime_trend(tf), REGIME_VAR.0.sqrt())
            } else if t < 16 {
                let var = if regime2_component(rng) == 0 { REGIME_VAR.0 } else { REGIME_VAR.1 };
                (regime_trend(tf), var.sqrt())
            } else {
                let center = if rng.gen::<f64>() < 0.5 {
                    regime_trend(tf)
                } else {
                    0.1 * tf + regime_trend(tf)
                };
                (center, REGIME_VAR.2.sqrt())
            };
            observations.push(Observation::new(
                SpaceTimePoint::new(x, y, t),
                center + sd * field[(i, 0)],
            ));
        }
    }
    let mut ds = Dataset::new(observations);
    ds.domain = Some(SpaceTimeDomain::unit(t_max));
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::RunningMoments;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn thomas_is_deterministic_under_seed() {
        let window = SpaceTimeDomain::unit(1);
        let a = thomas_process(10.0, 15.0, 0.1, &window, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = thomas_process(10.0, 15.0, 0.1, &window, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thomas_mean_count_matches_total_expectation() {
        let window = SpaceTimeDomain::unit(1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (omega, delta) = (10.0, 20.0);
        let mut acc = RunningMoments::default();
        for _ in 0..1000 {
            let pts = thomas_process(omega, delta, 0.1, &window, &mut rng).unwrap();
            acc.push(pts.len() as f64);
        }
        let want = omega * delta; // unit area
        let se = acc.std_error();
        assert!(
            (acc.mean() - want).abs() < 3.0 * se,
            "mean={} want={want} se={se}",
            acc.mean()
        );
    }

    #[test]
    fn daughters_stay_near_some_parent_and_inside_window() {
        // radius bound survives clamping because projection onto the convex
        // window cannot move a daughter farther from its parent
        let window = SpaceTimeDomain::unit(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = thomas_process(20.0, 10.0, 0.1, &window, &mut rng).unwrap();
        for (x, y) in pts {
            assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn cov_zero_lag_equals_total_variance() {
        let p = SpaceTimePoint::new(0.3, 0.4, 2);
        let cases: Vec<(CovModelSpec, f64)> = vec![
            (CovModelSpec::GaussianCov { tau2: 1.0, h: 0.4 }, 1.0),
            (CovModelSpec::ExpNuggetTrend { tau2: 4.0, h: 10.0, nugget: 0.3, trend_mean: 0.5 }, 4.3),
            (CovModelSpec::Stable { tau2: 2.0, h: 0.4, alpha: 1.9 }, 2.0),
            (CovModelSpec::ZonalAnisotropyNugget { tau2: 1.0, h: 0.5, nugget: 0.2, long_axis: 0 }, 1.2),
            (CovModelSpec::Stein { nu: 1.5 }, 1.0),
            (CovModelSpec::NonSeparable, 1.0),
        ];
        for (spec, want) in cases {
            let c = cov_value(&spec, &p, &p);
            assert!((c - want).abs() < 1e-12, "{spec:?}: {c} vs {want}");
        }
    }

    #[test]
    fn gaussian_model_hand_value() {
        let spec = CovModelSpec::GaussianCov { tau2: 1.0, h: 0.4 };
        // ‖s−s'‖² = 0.4 → e⁻¹
        let p = SpaceTimePoint::new(0.0, 0.0, 1);
        let q = SpaceTimePoint::new(0.4f64.sqrt(), 0.0, 1);
        let c = cov_value(&spec, &p, &q);
        assert!((c - (-1.0f64).exp()).abs() < 1e-12);
        assert!((c - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn stable_model_hand_value() {
        let (tau2, h, alpha) = (1.5, 0.4, 1.9);
        let spec = CovModelSpec::Stable { tau2, h, alpha };
        let d = h.powf(1.0 / alpha);
        let p = SpaceTimePoint::new(0.0, 0.0, 1);
        let q = SpaceTimePoint::new(d, 0.0, 1);
        let c = cov_value(&spec, &p, &q);
        assert!((c - tau2 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn stein_rejects_other_smoothness() {
        assert!(matches!(
            CovModelSpec::Stein { nu: 2.5 }.validate(),
            Err(DatagenError::UnsupportedParams(_))
        ));
    }

    #[test]
    fn single_point_field_has_total_variance() {
        let spec = CovModelSpec::ExpNuggetTrend { tau2: 4.0, h: 10.0, nugget: 0.5, trend_mean: 0.5 };
        let p = [SpaceTimePoint::new(0.2, 0.2, 1)];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut acc = RunningMoments::default();
        for _ in 0..10_000 {
            acc.push(simulate_field(&spec, &p, &mut rng).unwrap()[0]);
        }
        assert!((acc.mean() - 0.5).abs() < 0.1, "mean {}", acc.mean());
        let want = 4.5;
        assert!((acc.variance() - want).abs() / want < 0.05, "var {}", acc.variance());
    }

    #[test]
    fn empirical_covariance_matches_cov_value() {
        let spec = CovModelSpec::NonSeparable;
        let pts = [
            SpaceTimePoint::new(0.1, 0.1, 1),
            SpaceTimePoint::new(0.5, 0.3, 2),
            SpaceTimePoint::new(0.9, 0.8, 4),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 10_000;
        let draws: Vec<Vec<f64>> =
            (0..n).map(|_| simulate_field(&spec, &pts, &mut rng).unwrap()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let mi: f64 = draws.iter().map(|d| d[i]).sum::<f64>() / n as f64;
                let mj: f64 = draws.iter().map(|d| d[j]).sum::<f64>() / n as f64;
                let cov_emp: f64 =
                    draws.iter().map(|d| (d[i] - mi) * (d[j] - mj)).sum::<f64>() / (n - 1) as f64;
                let want = cov_value(&spec, &pts[i], &pts[j]);
                // se of a normal covariance estimate
                let vi = cov_value(&spec, &pts[i], &pts[i]);
                let vj = cov_value(&spec, &pts[j], &pts[j]);
                let se = ((vi * vj + want * want) / n as f64).sqrt();
                assert!(
                    (cov_emp - want).abs() < 3.0 * se,
                    "({i},{j}): emp={cov_emp} want={want} se={se}"
                );
            }
        }
    }

    #[test]
    fn replicate_and_redraw_modes_behave_as_stated() {
        let spec = CovModelSpec::GaussianCov { tau2: 1.0, h: 0.4 };
        let locations = [(0.2, 0.2), (0.8, 0.5)];
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let rep = simulate_spacetime(&spec, &locations, 3, TimeMode::Replicate, &mut rng).unwrap();
        // same location, different t: identical values in replicate mode
        let y = |ds: &Dataset, loc: usize, t: u32| {
            ds.observations
                .iter()
                .find(|o| o.point.t == t && o.point.s1 == locations[loc].0)
                .unwrap()
                .y
                .unwrap()
        };
        assert_eq!(y(&rep, 0, 1), y(&rep, 0, 2));
        assert_eq!(y(&rep, 1, 1), y(&rep, 1, 3));
        let red = simulate_spacetime(&spec, &locations, 3, TimeMode::Redraw, &mut rng).unwrap();
        assert_ne!(y(&red, 0, 1), y(&red, 0, 2));
    }

    #[test]
    fn regime_trend_hand_value() {
        // f(16) = cos 16 + 2 sin 16 + 8 − 16 ≈ −9.533
        let f = regime_trend(16.0);
        assert!((f - (-9.533)).abs() < 5e-3, "{f}");
    }

    #[test]
    fn regime2_indicator_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let ones: usize = (0..n).filter(|_| regime2_component(&mut rng) == 1).count();
        let f = ones as f64 / n as f64;
        assert!((f - 0.7).abs() < 0.015, "{f}");
    }

    #[test]
    fn regime1_marginal_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // T = 7 keeps every draw in regime 1; short lengthscale keeps
        // stations nearly independent so pooling is a fair variance check
        let mut acc = RunningMoments::default();
        for _ in 0..60 {
            let ds = scenario_regime(40, 7, 0.05, &mut rng).unwrap();
            for o in &ds.observations {
                acc.push(o.y.unwrap() - regime_trend(o.point.t as f64));
            }
        }
        let var = acc.variance();
        assert!((var - 0.04).abs() / 0.04 < 0.10, "var={var}");
    }

    #[test]
    fn regime_boundaries_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        // many stations at t = 7 vs t = 8: regime 1 is tight (sd 0.2), regime 2
        // mixes in sd 1 draws, so spread at t = 8 must be visibly larger
        let ds = scenario_regime(400, 16, 0.02, &mut rng).unwrap();
        let spread = |t: u32| {
            let vals: Vec<f64> = ds
                .observations
                .iter()
                .filter(|o| o.point.t == t)
                .map(|o| o.y.unwrap() - regime_trend(t as f64))
                .collect();
            let mut acc = RunningMoments::default();
            for v in vals {
                acc.push(v);
            }
            acc.variance()
        };
        assert!(spread(7) < 0.1, "regime 1 variance {}", spread(7));
        assert!(spread(8) > 0.3, "regime 2 variance {}", spread(8));
        // t = 16 enters regime 3: two centers f(t) and 0.1t + f(t)
        let t16: Vec<f64> = ds
            .observations
            .iter()
            .filter(|o| o.point.t == 16)
            .map(|o| o.y.unwrap())
            .collect();
        assert!(!t16.is_empty());
    }

    #[test]
    fn scenario_is_deterministic() {
        let a = scenario_regime(20, 24, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = scenario_regime(20, 24, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }
}
