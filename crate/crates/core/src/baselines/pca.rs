use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{invalid, Result};

/// Empirical autocorrelation `R̂ = (1/n) Σ x xᵀ`.
pub fn autocorrelation(data: &DataMatrix) -> DMatrix<f64> {
    let d = data.d();
    let mut r = DMatrix::zeros(d, d);
    for x in data.rows() {
        for a in 0..d {
            for b in 0..=a {
                r[(a, b)] += x[a] * x[b];
            }
        }
    }
    let n = data.n().max(1) as f64;
    for a in 0..d {
        for b in 0..=a {
            let v = r[(a, b)] / n;
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    r
}

/// Top-`k` eigenvectors of `R̂` as a `d × k` matrix, by descending eigenvalue,
/// each oriented so its largest-magnitude entry is positive.
pub fn exact_pca(data: &DataMatrix, k: usize) -> Result<DMatrix<f64>> {
    let d = data.d();
    if k == 0 || k > d {
        return Err(invalid(format!("need 1 <= k <= d={d}, got k={k}")));
    }
    let eig = autocorrelation(data).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let cols: Vec<_> = order
        .iter()
        .take(k)
        .map(|&i| {
            let mut v = eig.eigenvectors.column(i).into_owned();
            let lead = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
            if lead < 0.0 {
                v.neg_mut();
            }
            v
        })
        .collect();
    Ok(DMatrix::from_columns(&cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;

    #[test]
    fn axis_aligned_data() {
        let mut rng = SeedStream::new(1, 0);
        let rows: Vec<Vec<f64>> = (0..5000)
            .map(|_| vec![3.0 * rng.gaussian(), 0.1 * rng.gaussian(), 1.0 * rng.gaussian()])
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let basis = exact_pca(&data, 2).unwrap();
        assert!((basis[(0, 0)] - 1.0).abs() < 1e-2);
        assert!((basis[(2, 1)] - 1.0).abs() < 1e-2);
        assert!(exact_pca(&data, 4).is_err());
    }
}
