use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Lawson–Hanson active-set solution of `min ‖b − Aα‖²` subject to `α ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m, "target length must match the atom matrix");
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let scale = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(f64::MIN_POSITIVE);
    let tol = 10.0 * f64::EPSILON * scale * (m.max(n) as f64) * b.norm().max(1.0);
    let max_outer = 3 * n + 30;

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |r, c| a[(r, cols[c])]);
        let sol = sub
            .svd(true, true)
            .solve(b, f64::EPSILON * 1e2)
            .expect("SVD was computed with both factors");
        let mut full = DVector::zeros(n);
        for (c, &j) in cols.iter().enumerate() {
            full[j] = sol[c];
        }
        full
    };

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..3 * n + 30 {
            let s = solve_passive(&passive);
            if (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in (0..n).filter(|&i| passive[i] && s[i] <= 0.0) {
                alpha = alpha.min(x[i] / (x[i] - s[i]));
            }
            x += (s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= tol {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// NNLS over complex atoms (each a length-`m` column), treating real and
/// imaginary parts as separate measurements.
pub(crate) fn nnls_complex(atoms: &[Vec<Complex64>], target: &[Complex64]) -> Vec<f64> {
    let m = target.len();
    let a = DMatrix::from_fn(2 * m, atoms.len(), |r, c| {
        let v = atoms[c][r % m];
        if r < m {
            v.re
        } else {
            v.im
        }
    });
    let b = DVector::from_fn(2 * m, |r, _| if r < m { target[r].re } else { target[r - m].im });
    nnls(&a, &b).iter().copied().collect()
}
