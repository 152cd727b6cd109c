//! Domain types for spatio-temporal observations and dataset validation.
//!
//! Observations live on a two-dimensional spatial domain crossed with a
//! discrete time grid `1..=T`. All types here are immutable values and safe
//! to share read-only across threads.

use thiserror::Error;

/// A 2-D location plus a discrete time index; the index of every field
/// evaluation in the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimePoint {
    pub s1: f64,
    pub s2: f64,
    /// Time index on the grid `1..=T`.
    pub t: u32,
}

impl SpaceTimePoint {
    pub fn new(s1: f64, s2: f64, t: u32) -> Self {
        Self { s1, s2, t }
    }

    pub fn spatial(&self) -> (f64, f64) {
        (self.s1, self.s2)
    }

    /// Euclidean distance between the spatial parts.
    pub fn spatial_distance(&self, other: &Self) -> f64 {
        let d1 = self.s1 - other.s1;
        let d2 = self.s2 - other.s2;
        (d1 * d1 + d2 * d2).sqrt()
    }
}

/// One response value at a space-time point, with optional covariates.
///
/// A missing response (`y == None`) marks a prediction target: the row is
/// kept in the dataset but contributes nothing to any likelihood.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub point: SpaceTimePoint,
    pub y: Option<f64>,
    pub x: Option<Vec<f64>>,
}

impl Observation {
    pub fn new(point: SpaceTimePoint, y: f64) -> Self {
        Self { point, y: Some(y), x: None }
    }

    pub fn with_covariates(point: SpaceTimePoint, y: f64, x: Vec<f64>) -> Self {
        Self { point, y: Some(y), x: Some(x) }
    }
}

/// Closed spatial box crossed with the time grid `1..=t_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaceTimeDomain {
    pub s1_range: (f64, f64),
    pub s2_range: (f64, f64),
    pub t_max: u32,
}

impl SpaceTimeDomain {
    /// Unit square with the given number of time points.
    pub fn unit(t_max: u32) -> Self {
        Self { s1_range: (0.0, 1.0), s2_range: (0.0, 1.0), t_max }
    }

    pub fn contains(&self, p: &SpaceTimePoint) -> bool {
        p.s1 >= self.s1_range.0
            && p.s1 <= self.s1_range.1
            && p.s2 >= self.s2_range.0
            && p.s2 <= self.s2_range.1
            && p.t >= 1
            && p.t <= self.t_max
    }

    /// Length of the spatial box diagonal.
    pub fn diagonal(&self) -> f64 {
        let w1 = self.s1_range.1 - self.s1_range.0;
        let w2 = self.s2_range.1 - self.s2_range.0;
        (w1 * w1 + w2 * w2).sqrt()
    }
}

/// A collection of observations together with their domain.
///
/// `domain == None` means the domain has not been established yet;
/// [`validate_dataset`] infers it as the bounding box of the points.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
    pub domain: Option<SpaceTimeDomain>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Self {
        Self { observations, domain: None }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of covariates per observation, 0 when none carry covariates.
    pub fn covariate_dim(&self) -> usize {
        self.observations
            .iter()
            .find_map(|o| o.x.as_ref().map(|x| x.len()))
            .unwrap_or(0)
    }
}

/// Validation findings that do not reject the dataset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    /// 1-based indices of observations whose (s, t) point duplicates an
    /// earlier one. Replicates are legal; they are reported, not rejected.
    pub duplicate_points: Vec<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("validate_dataset: dataset is empty")]
    EmptyDataset,
    #[error("validate_dataset: non-finite value at observation {0}")]
    NonFiniteValue(usize),
    #[error("validate_dataset: covariate length mismatch at observation {0}")]
    CovariateLengthMismatch(usize),
    #[error("validate_dataset: time index must be >= 1 at observation {0}")]
    InvalidTimeIndex(usize),
    #[error("validate_dataset: observation {0} lies outside the stated domain")]
    PointOutsideDomain(usize),
}

/// Checks finiteness and covariate consistency, infers a bounding-box domain
/// when none is present, and reports duplicate (s, t) points.
///
/// Observation indices in errors and in the report are 1-based. Validation
/// is idempotent: validating a validated dataset returns an equal value.
pub fn validate_dataset(raw: Dataset) -> Result<(Dataset, ValidationReport), DataError> {
    if raw.observations.is_empty() {
        return Err(DataError::EmptyDataset);
    }

    let mut p: Option<usize> = None;
    for (idx0, obs) in raw.observations.iter().enumerate() {
        let idx = idx0 + 1;
        if !obs.point.s1.is_finite() || !obs.point.s2.is_finite() {
            return Err(DataError::NonFiniteValue(idx));
        }
        if let Some(y) = obs.y {
            if !y.is_finite() {
                return Err(DataError::NonFiniteValue(idx));
            }
        }
        if obs.point.t < 1 {
            return Err(DataError::InvalidTimeIndex(idx));
        }
        match (&obs.x, p) {
            (Some(x), None) => {
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DataError::NonFiniteValue(idx));
                }
                p = Some(x.len());
            }
            (Some(x), Some(len)) => {
                if x.len() != len {
                    return Err(DataError::CovariateLengthMismatch(idx));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(DataError::NonFiniteValue(idx));
                }
            }
            (None, Some(_)) => return Err(DataError::CovariateLengthMismatch(idx)),
            (None, None) => {}
        }
    }
    // a leading run of covariate-free rows followed by covariate rows is
    // also a mismatch; rescan now that p is known
    if p.is_some() {
        for (idx0, obs) in raw.observations.iter().enumerate() {
            if obs.x.is_none() {
                return Err(DataError::CovariateLengthMismatch(idx0 + 1));
            }
        }
    }

    let domain = match raw.domain {
        Some(d) => {
            for (idx0, obs) in raw.observations.iter().enumerate() {
                if !d.contains(&obs.point) {
                    return Err(DataError::PointOutsideDomain(idx0 + 1));
                }
            }
            d
        }
        None => infer_bounding_box(&raw.observations),
    };

    let mut seen = std::collections::HashMap::new();
    let mut duplicates = Vec::new();
    for (idx0, obs) in raw.observations.iter().enumerate() {
        let key = (obs.point.s1.to_bits(), obs.point.s2.to_bits(), obs.point.t);
        if seen.insert(key, idx0).is_some() {
            duplicates.push(idx0 + 1);
        }
    }

    Ok((
        Dataset { observations: raw.observations, domain: Some(domain) },
        ValidationReport { duplicate_points: duplicates },
    ))
}

fn infer_bounding_box(observations: &[Observation]) -> SpaceTimeDomain {
    let mut s1 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut s2 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut t_max = 1u32;
    for obs in observations {
        s1 = (s1.0.min(obs.point.s1), s1.1.max(obs.point.s1));
        s2 = (s2.0.min(obs.point.s2), s2.1.max(obs.point.s2));
        t_max = t_max.max(obs.point.t);
    }
    // degenerate axes are widened so the box stays a valid knot support
    if s1.0 == s1.1 {
        s1 = (s1.0 - 0.5, s1.1 + 0.5);
    }
    if s2.0 == s2.1 {
        s2 = (s2.0 - 0.5, s2.1 + 0.5);
    }
    SpaceTimeDomain { s1_range: s1, s2_range: s2, t_max }
}
