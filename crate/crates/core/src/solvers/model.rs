use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(invalid("model needs at least one component"));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(invalid("weights must be nonnegative"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("weights must sum to 1, got {total}")));
    }
    Ok(())
}

fn check_rows(rows: &[Vec<f64>], k: usize) -> Result<usize> {
    if rows.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: rows.len(),
        });
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(invalid("components must have positive dimension"));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: r.len(),
        });
    }
    Ok(d)
}

fn normalize(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        let u = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = u);
    }
}

/// Component order: descending weight, ties broken lexicographically on `key`.
fn canonical_order(weights: &[f64], key: &[Vec<f64>]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    idx.sort_by(|&a, &b| {
        weights[b]
            .total_cmp(&weights[a])
            .then_with(|| {
                key[a]
                    .iter()
                    .zip(&key[b])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    idx
}

/// Weighted cluster centroids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidModel {
    pub centroids: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl CentroidModel {
    pub fn new(centroids: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        check_rows(&centroids, weights.len())?;
        Ok(Self { centroids, weights })
    }

    /// Builds a model from nonnegative weights of any total, rescaling to the simplex.
    pub fn normalized(centroids: Vec<Vec<f64>>, mut weights: Vec<f64>) -> Result<Self> {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        normalize(&mut weights);
        Self::new(centroids, weights)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn d(&self) -> usize {
        self.centroids[0].len()
    }

    pub fn canonicalize(&mut self) {
        let order = canonical_order(&self.weights, &self.centroids);
        self.centroids = order.iter().map(|&i| self.centroids[i].clone()).collect();
        self.weights = order.iter().map(|&i| self.weights[i]).collect();
    }
}

/// Mixture of Gaussians with diagonal covariances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        check_weights(&weights)?;
        let d = check_rows(&means, weights.len())?;
        let dv = check_rows(&variances, weights.len())?;
        if d != dv {
            return Err(Error::DimensionMismatch { expected: d, got: dv });
        }
        if variances.iter().flatten().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("variances must be strictly positive"));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    pub fn normalized(mut weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        weights.iter_mut().for_each(|w| *w = w.max(0.0));
        normalize(&mut weights);
        Self::new(weights, means, variances)
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn d(&self) -> usize {
        self.means[0].len()
    }

    pub fn canonicalize(&mut self) {
        let order = canonical_order(&self.weights, &self.means);
        self.means = order.iter().map(|&i| self.means[i].clone()).collect();
        self.variances = order.iter().map(|&i| self.variances[i].clone()).collect();
        self.weights = order.iter().map(|&i| self.weights[i]).collect();
    }

    /// Ln density of one sample.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.k())
            .filter(|&l| self.weights[l] > 0.0)
            .map(|l| self.weights[l].ln() + diag_gaussian_log_pdf(x, &self.means[l], &self.variances[l]))
            .collect();
        log_sum_exp(&terms)
    }
}

pub(crate) fn diag_gaussian_log_pdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((xi, mi), vi)| -0.5 * (ln_2pi + vi.ln() + (xi - mi).powi(2) / vi))
        .sum()
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `R = U Uᵀ` stored through its `d × k` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankPsd {
    pub factor: DMatrix<f64>,
}

impl LowRankPsd {
    pub fn d(&self) -> usize {
        self.factor.nrows()
    }

    pub fn k(&self) -> usize {
        self.factor.ncols()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    /// Orthonormal basis of the column space of `U`, ordered by singular value.
    pub fn subspace(&self) -> DMatrix<f64> {
        let svd = self.factor.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let cols: Vec<_> = order.iter().take(self.k()).map(|&i| u.column(i).into_owned()).collect();
        DMatrix::from_columns(&cols)
    }
}

/// JSON document written for every recovered model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub task: String,
    pub k: usize,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroids: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<Vec<Vec<f64>>>,
    /// Row-major `d × k` factor `U` for PCA, or the `d1 × d2` weights for regression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<Vec<Vec<f64>>>,
    pub objective: f64,
    pub seed: u64,
    pub fingerprint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl ModelDocument {
    pub fn from_centroids(model: &CentroidModel, objective: f64, seed: u64, fingerprint: String) -> Self {
        Self {
            task: "kmeans".into(),
            k: model.k(),
            d: model.d(),
            weights: model.weights.clone(),
            centroids: Some(model.centroids.clone()),
            means: None,
            variances: None,
            factor: None,
            objective,
            seed,
            fingerprint,
            config: None,
        }
    }

    pub fn from_gmm(model: &GmmModel, objective: f64, seed: u64, fingerprint: String) -> Self {
        Self {
            task: "gmm".into(),
            k: model.k(),
            d: model.d(),
            weights: model.weights.clone(),
            centroids: None,
            means: Some(model.means.clone()),
            variances: Some(model.variances.clone()),
            factor: None,
            objective,
            seed,
            fingerprint,
            config: None,
        }
    }

    pub fn from_lowrank(model: &LowRankPsd, objective: f64, seed: u64, fingerprint: String) -> Self {
        Self {
            task: "pca".into(),
            k: model.k(),
            d: model.d(),
            weights: Vec::new(),
            centroids: None,
            means: None,
            variances: None,
            factor: Some(matrix_rows(&model.factor)),
            objective,
            seed,
            fingerprint,
            config: None,
        }
    }

    pub fn from_regression(theta: &DMatrix<f64>, objective: f64, fingerprint: String) -> Self {
        Self {
            task: "regress".into(),
            k: theta.nrows(),
            d: theta.nrows() + theta.ncols(),
            weights: Vec::new(),
            centroids: None,
            means: None,
            variances: None,
            factor: Some(matrix_rows(theta)),
            objective,
            seed: 0,
            fingerprint,
            config: None,
        }
    }

    pub fn centroid_model(&self) -> Result<CentroidModel> {
        let c = self.centroids.clone().ok_or_else(|| invalid("document has no centroids"))?;
        CentroidModel::new(c, self.weights.clone())
    }

    pub fn gmm_model(&self) -> Result<GmmModel> {
        let means = self.means.clone().ok_or_else(|| invalid("document has no means"))?;
        let vars = self.variances.clone().ok_or_else(|| invalid("document has no variances"))?;
        GmmModel::new(self.weights.clone(), means, vars)
    }

    /// The stored factor as a matrix.
    pub fn factor_matrix(&self) -> Result<DMatrix<f64>> {
        let rows = self.factor.as_ref().ok_or_else(|| invalid("document has no factor"))?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(invalid("factor must be a nonempty rectangular matrix"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }
}
