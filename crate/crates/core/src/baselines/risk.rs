use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{invalid, Error, Result};
use crate::solvers::{CentroidModel, GmmModel};

/// Parameters for the per-task empirical risk.
#[derive(Clone, Copy, Debug)]
pub enum RiskParams<'a> {
    /// Mean squared distance to the nearest centroid.
    KMeans(&'a CentroidModel),
    /// Negative mean log-likelihood.
    Gmm(&'a GmmModel),
    /// Negative mean captured energy `-Σ_ℓ (xᵀu_ℓ)²`. The energy is a
    /// quantity to maximize, so it is negated to make every task a minimization.
    Pca(&'a DMatrix<f64>),
    /// Mean `‖x₁ - Θx₂‖²` where `x₁` are the first `theta.nrows()` coordinates.
    Regression(&'a DMatrix<f64>),
}

/// `(1/n) Σ_i L(θ | x_i)` for the chosen task.
pub fn empirical_risk(params: RiskParams<'_>, data: &DataMatrix) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("empirical risk of an empty dataset"));
    }
    let d = data.d();
    let n = data.n() as f64;
    let total: f64 = match params {
        RiskParams::KMeans(model) => {
            if model.d() != d {
                return Err(Error::DimensionMismatch { expected: d, got: model.d() });
            }
            super::kmeans_sse(data, &model.centroids)
        }
        RiskParams::Gmm(model) => {
            if model.d() != d {
                return Err(Error::DimensionMismatch { expected: d, got: model.d() });
            }
            -data.rows().map(|x| model.log_density(x)).sum::<f64>()
        }
        RiskParams::Pca(basis) => {
            if basis.nrows() != d {
                return Err(Error::DimensionMismatch { expected: d, got: basis.nrows() });
            }
            -data
                .rows()
                .map(|x| {
                    basis
                        .column_iter()
                        .map(|u| u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().powi(2))
                        .sum::<f64>()
                })
                .sum::<f64>()
        }
        RiskParams::Regression(theta) => {
            let (d1, d2) = (theta.nrows(), theta.ncols());
            if d1 + d2 != d {
                return Err(Error::DimensionMismatch { expected: d, got: d1 + d2 });
            }
            data.rows()
                .map(|x| {
                    (0..d1)
                        .map(|a| {
                            let pred: f64 = (0..d2).map(|b| theta[(a, b)] * x[d1 + b]).sum();
                            (x[a] - pred).powi(2)
                        })
                        .sum::<f64>()
                })
                .sum()
        }
    };
    Ok(total / n)
}

/// Parzen window score `(1/n) Σ exp(-‖c - x_i‖² / 2σ²)`.
pub fn parzen_score(data: &DataMatrix, c: &[f64], sigma: f64) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    data.rows()
        .map(|x| (-x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * inv).exp())
        .sum::<f64>()
        / data.n().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> DataMatrix {
        DataMatrix::from_rows(&[[1.0, 2.0], [-1.0, 0.5], [0.0, 3.0]]).unwrap()
    }

    #[test]
    fn kmeans_zero_when_centroids_cover_samples() {
        let data = data();
        let model = CentroidModel::new(data.rows().map(<[f64]>::to_vec).collect(), vec![1.0 / 3.0; 3]).unwrap();
        assert_eq!(empirical_risk(RiskParams::KMeans(&model), &data).unwrap(), 0.0);
    }

    #[test]
    fn gmm_matches_independent_density() {
        let data = data();
        let model = GmmModel::new(
            vec![0.3, 0.7],
            vec![vec![0.0, 1.0], vec![1.0, 2.0]],
            vec![vec![1.0, 0.5], vec![2.0, 0.25]],
        )
        .unwrap();
        let mut expected = 0.0;
        for x in data.rows() {
            let mut p = 0.0;
            for l in 0..2 {
                let mut dens = model.weights[l];
                for t in 0..2 {
                    let v = model.variances[l][t];
                    dens *= (-(x[t] - model.means[l][t]).powi(2) / (2.0 * v)).exp()
                        / (2.0 * std::f64::consts::PI * v).sqrt();
                }
                p += dens;
            }
            expected -= p.ln();
        }
        expected /= 3.0;
        let got = empirical_risk(RiskParams::Gmm(&model), &data).unwrap();
        assert!((got - expected).abs() < 1e-10 * expected.abs());
    }

    #[test]
    fn full_pca_basis_captures_total_energy() {
        let data = data();
        let eye = DMatrix::<f64>::identity(2, 2);
        let energy: f64 = data.as_slice().iter().map(|v| v * v).sum::<f64>() / 3.0;
        let got = empirical_risk(RiskParams::Pca(&eye), &data).unwrap();
        assert!((got + energy).abs() < 1e-14);
    }

    #[test]
    fn regression_risk_zero_for_exact_model() {
        let data = DataMatrix::from_rows(&[[2.0, 1.0], [-4.0, -2.0]]).unwrap();
        let theta = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(empirical_risk(RiskParams::Regression(&theta), &data).unwrap(), 0.0);
    }

    #[test]
    fn parzen_basics() {
        let one = DataMatrix::from_rows(&[[0.5, -0.5]]).unwrap();
        assert_eq!(parzen_score(&one, &[0.5, -0.5], 0.3), 1.0);
        assert!(parzen_score(&data(), &[100.0, 100.0], 0.5) < 1e-100);
    }
}
