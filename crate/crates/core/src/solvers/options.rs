use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};

/// Smallest variance a recovered Gaussian component may take.
pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Axis-aligned domain for candidate centroids and means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(invalid("search box needs at least one dimension"));
        }
        for (lo, hi) in lower.iter().zip(&upper) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid(format!("invalid box interval [{lo}, {hi}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Per-coordinate bounding box of `data`.
    pub fn from_data(data: &DataMatrix) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("cannot infer a search box from an empty dataset"));
        }
        let mut lower = vec![f64::INFINITY; data.d()];
        let mut upper = vec![f64::NEG_INFINITY; data.d()];
        for x in data.rows() {
            for (t, v) in x.iter().enumerate() {
                lower[t] = lower[t].min(*v);
                upper[t] = upper[t].max(*v);
            }
        }
        Self::new(lower, upper)
    }

    pub fn d(&self) -> usize {
        self.lower.len()
    }

    pub fn max_width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Random initializations per candidate search.
    pub restarts: usize,
    /// Stop a local optimization once an accepted step improves the
    /// objective by less than this fraction.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub search_box: Option<SearchBox>,
    pub seed: u64,
    pub variance_floor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            tolerance: 1e-8,
            max_iterations: 300,
            search_box: None,
            seed: 0,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

impl SolverOptions {
    pub fn with_box(search_box: SearchBox, seed: u64) -> Self {
        Self {
            search_box: Some(search_box),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 {
            return Err(invalid("restarts and max_iterations must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.variance_floor > 0.0) {
            return Err(invalid("variance floor must be positive"));
        }
        Ok(())
    }

    pub(crate) fn require_box(&self, d: usize) -> Result<&SearchBox> {
        let b = self
            .search_box
            .as_ref()
            .ok_or_else(|| invalid("a search box is required (supply one or sketch with box metadata)"))?;
        if b.d() != d {
            return Err(Error::DimensionMismatch { expected: d, got: b.d() });
        }
        Ok(b)
    }
}
