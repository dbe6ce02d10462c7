use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::feature_map::MapKind;
use crate::sketch::Sketch;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionOptions {
    /// Largest accepted condition number of `R̂₂₂`.
    pub max_condition: f64,
    /// Optional ridge term `λ` added to the diagonal of `R̂₂₂`.
    pub ridge: Option<f64>,
}

impl Default for RegressionOptions {
    fn default() -> Self {
        Self {
            max_condition: 1e12,
            ridge: None,
        }
    }
}

/// Least-squares weights `Θ = R̂₁₂ R̂₂₂⁻¹` from an outer-product sketch, where
/// the first `d1` coordinates are the targets and the last `d2` the
/// regressors.
pub fn ls_regression(sketch: &Sketch, d1: usize, d2: usize) -> Result<DMatrix<f64>> {
    ls_regression_with(sketch, d1, d2, &RegressionOptions::default())
}

pub fn ls_regression_with(sketch: &Sketch, d1: usize, d2: usize, opts: &RegressionOptions) -> Result<DMatrix<f64>> {
    if sketch.kind() != MapKind::OuterProduct {
        return Err(Error::UnsupportedKind {
            kind: sketch.kind().name(),
            operation: "sketched regression",
        });
    }
    let d = sketch.params().d as usize;
    if d1 == 0 || d2 == 0 || d1 + d2 != d {
        return Err(invalid(format!("need d1 + d2 = {d} with both positive, got {d1} + {d2}")));
    }
    if sketch.n() == 0 {
        return Err(Error::EmptySketch);
    }
    let values = sketch.real_values();
    let r = DMatrix::from_column_slice(d, d, &values);
    let r12 = r.view((0, d1), (d1, d2)).into_owned();
    let mut r22 = r.view((d1, d1), (d2, d2)).into_owned();
    r22 = (&r22 + r22.transpose()) * 0.5;
    if let Some(lambda) = opts.ridge {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("ridge must be nonnegative, got {lambda}")));
        }
        for i in 0..d2 {
            r22[(i, i)] += lambda;
        }
    }
    let sv = r22.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= opts.max_condition) {
        return Err(Error::IllConditioned { cond });
    }
    // Θ R̂₂₂ = R̂₁₂ ⇔ R̂₂₂ Θᵀ = R̂₁₂ᵀ since R̂₂₂ is symmetric.
    let theta_t = r22
        .clone()
        .lu()
        .solve(&r12.transpose())
        .ok_or(Error::IllConditioned { cond })?;
    Ok(theta_t.transpose())
}
