//! Data containers shared by the estimators, the bootstrap and the bands.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Equally spaced series with an observed/missing indicator per index.
///
/// Index `i` (zero based) corresponds to time `t = i + 1` and rescaled time
/// `t / n`. Values at missing indices are placeholders and never read by any
/// estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    values: Vec<f64>,
    observed: Vec<bool>,
}

impl ObservedSeries {
    pub fn new(values: Vec<f64>, observed: Vec<bool>) -> Result<Self> {
        if values.len() != observed.len() {
            return invalid(format!(
                "values ({}) and observed flags ({}) differ in length",
                values.len(),
                observed.len()
            ));
        }
        if !observed.iter().any(|&d| d) {
            return invalid("series has no observed value");
        }
        if let Some(i) = (0..values.len()).find(|&i| observed[i] && !values[i].is_finite()) {
            return invalid(format!("observed value at index {i} is not finite"));
        }
        Ok(Self { values, observed })
    }

    /// A fully observed series.
    pub fn complete(values: Vec<f64>) -> Result<Self> {
        let observed = vec![true; values.len()];
        Self::new(values, observed)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn is_observed(&self, i: usize) -> bool {
        self.observed[i]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&d| d).count()
    }

    /// Rescaled time `(i + 1) / n` of zero-based index `i`.
    #[inline]
    pub fn time_of(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.values.len() as f64
    }

    /// Same missing pattern with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.observed.clone())
    }
}

/// Strictly increasing evaluation points inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<f64>,
}

impl EvalGrid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return invalid("evaluation grid is empty");
        }
        if let Some(p) = points.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return invalid(format!("grid point {p} is outside (0, 1)"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("grid points must be strictly increasing");
        }
        Ok(Self { points })
    }

    /// The rescaled sample times `t / n` lying strictly inside `(delta, 1 - delta)`.
    pub fn interior(n: usize, delta: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&delta) {
            return invalid(format!("boundary margin {delta} must lie in [0, 0.5)"));
        }
        let points = (1..=n)
            .map(|t| t as f64 / n as f64)
            .filter(|&tau| tau > delta && tau < 1.0 - delta)
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sub-grid made of the given indices (must be increasing).
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut pts = Vec::with_capacity(indices.len());
        for &i in indices {
            match self.points.get(i) {
                Some(&p) => pts.push(p),
                None => return invalid(format!("grid index {i} out of range")),
            }
        }
        Self::new(pts)
    }

    /// Index of each `targets` point in this grid, matched within `tol`.
    pub fn locate(&self, targets: &[f64], tol: f64) -> Result<Vec<usize>> {
        targets
            .iter()
            .map(|&x| {
                self.points
                    .iter()
                    .position(|&p| (p - x).abs() <= tol)
                    .map_or_else(|| invalid(format!("point {x} not on grid")), Ok)
            })
            .collect()
    }
}

/// Trend estimates on a grid; `valid[i]` is false where too little data
/// surrounds the grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCurve {
    pub grid: EvalGrid,
    pub estimate: Vec<f64>,
    pub valid: Vec<bool>,
}

impl TrendCurve {
    pub(crate) fn from_options(grid: EvalGrid, values: Vec<Option<f64>>) -> Self {
        let valid = values.iter().map(Option::is_some).collect();
        let estimate = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Self {
            grid,
            estimate,
            valid,
        }
    }

    pub fn len(&self) -> usize {
        self.estimate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimate.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.valid[i].then(|| self.estimate[i])
    }
}

/// Smoothing bandwidth on rescaled time, `0 < h < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bandwidth(f64);

impl Bandwidth {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            invalid(format!("bandwidth {h} must lie in (0, 1)"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// Oversmoothing bandwidth `C h^{5/9}`.
    pub fn oversmoothed(self, c: f64) -> Result<Self> {
        Self::new(c * self.0.powf(5.0 / 9.0))
    }
}

impl TryFrom<f64> for Bandwidth {
    type Error = crate::Error;
    fn try_from(h: f64) -> Result<Self> {
        Self::new(h)
    }
}

impl From<Bandwidth> for f64 {
    fn from(h: Bandwidth) -> f64 {
        h.0
    }
}
