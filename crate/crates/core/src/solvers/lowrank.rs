use nalgebra::DMatrix;

use super::model::LowRankPsd;
use super::optim::minimize;
use super::SolverOptions;
use crate::error::{invalid, Error, Result};
use crate::feature_map::{FeatureMapSpec, MapKind};
use crate::rng::{streams, SeedStream};
use crate::sketch::Sketch;

fn check(sketch: &Sketch, spec: &FeatureMapSpec) -> Result<()> {
    if sketch.fingerprint() != spec.fingerprint() {
        return Err(Error::IncompatibleSketch);
    }
    if spec.kind() != MapKind::Quadratic {
        return Err(Error::UnsupportedKind {
            kind: spec.kind().name(),
            operation: "low-rank PSD fitting",
        });
    }
    Ok(())
}

/// `‖z − f(U)‖²` with `f(U)_j = ‖Uᵀw_j‖²`, and its gradient
/// `−4 Σ_j (z_j − f_j) w_j w_jᵀ U`. `w` is row-major `m × d`, `u` is `d × k`
/// stored column-major.
fn objective(w: &[f64], z: &[f64], d: usize, k: usize, u: &[f64]) -> (f64, Vec<f64>) {
    let mut f = 0.0;
    let mut g = vec![0.0; d * k];
    let mut proj = vec![0.0; k];
    for (j, zj) in z.iter().enumerate() {
        let row = &w[j * d..(j + 1) * d];
        for (c, p) in proj.iter_mut().enumerate() {
            *p = row.iter().zip(&u[c * d..(c + 1) * d]).map(|(a, b)| a * b).sum();
        }
        let fj: f64 = proj.iter().map(|p| p * p).sum();
        let e = zj - fj;
        f += e * e;
        for (c, p) in proj.iter().enumerate() {
            let s = -4.0 * e * p;
            for (gi, wi) in g[c * d..(c + 1) * d].iter_mut().zip(row) {
                *gi += s * wi;
            }
        }
    }
    (f, g)
}

/// Low-rank objective and gradient at `u` for a quadratic-map sketch.
pub fn lowrank_objective(sketch: &Sketch, spec: &FeatureMapSpec, u: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    check(sketch, spec)?;
    if u.nrows() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: u.nrows(),
        });
    }
    let op = spec.operator().expect("quadratic map has an operator");
    let z = sketch.real_values();
    let (f, g) = objective(op.rows(), &z, spec.d(), u.ncols(), u.as_slice());
    Ok((f, DMatrix::from_vec(u.nrows(), u.ncols(), g)))
}

/// Moment-based starting point. For Gaussian frequencies
/// `E[(wᵀRw) w wᵀ] = σ⁴ (2R + tr(R) I)` and `E[wᵀRw] = σ² tr(R)`, so `R` can be
/// read off the sketch directly; its top-`k` eigenpairs give the initial `U`.
fn spectral_init(w: &[f64], z: &[f64], d: usize, k: usize, sigma_w: f64) -> Vec<f64> {
    let m = z.len();
    let s2 = sigma_w * sigma_w;
    let mut mat = DMatrix::<f64>::zeros(d, d);
    for (j, zj) in z.iter().enumerate() {
        let row = &w[j * d..(j + 1) * d];
        for a in 0..d {
            for b in 0..=a {
                mat[(a, b)] += zj * row[a] * row[b];
            }
        }
    }
    let trace = z.iter().sum::<f64>() / (m as f64 * s2);
    for a in 0..d {
        for b in 0..=a {
            let v = mat[(a, b)] / (m as f64 * s2 * s2);
            let v = if a == b { (v - trace) / 2.0 } else { v / 2.0 };
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = Vec::with_capacity(d * k);
    for &i in order.iter().take(k) {
        let scale = eig.eigenvalues[i].max(0.0).sqrt();
        u.extend(eig.eigenvectors.column(i).iter().map(|v| v * scale));
    }
    u
}

/// Fits `R = UUᵀ` (rank ≤ `k`, PSD by construction) to a quadratic-map
/// sketch. The first run starts from a moment-based spectral estimate and the
/// remaining `restarts − 1` from seeded random factors; the best run is kept.
pub fn fit_lowrank_psd(sketch: &Sketch, k: usize, spec: &FeatureMapSpec, opts: &SolverOptions) -> Result<LowRankPsd> {
    check(sketch, spec)?;
    opts.validate()?;
    let d = spec.d();
    if k == 0 || k > d {
        return Err(invalid(format!("need 1 <= k <= d = {d}, got k = {k}")));
    }
    let op = spec.operator().expect("quadratic map has an operator");
    let w = op.rows();
    let z = sketch.real_values();
    let scale = (z.iter().sum::<f64>().abs() / (z.len() as f64 * spec.sigma_w().powi(2) * d as f64))
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let mut rng = SeedStream::new(opts.seed, streams::SOLVER);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for run in 0..opts.restarts {
        let init = if run == 0 {
            spectral_init(w, &z, d, k, spec.sigma_w())
        } else {
            (0..d * k).map(|_| scale * rng.gaussian()).collect()
        };
        let res = minimize(|u| objective(w, &z, d, k, u), init, None, opts.tolerance, opts.max_iterations);
        if best.as_ref().is_none_or(|(f, _)| res.f < *f) {
            best = Some((res.f, res.x));
        }
    }
    let (f, u) = best.expect("at least one restart");
    // U = 0 is always available and has objective ‖z‖².
    let zero: f64 = z.iter().map(|v| v * v).sum();
    let factor = if f <= zero {
        DMatrix::from_vec(d, k, u)
    } else {
        DMatrix::zeros(d, k)
    };
    if factor.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("low-rank factor is not finite".into()));
    }
    Ok(LowRankPsd { factor })
}
