//! Greedy recovery of mixtures of Diracs or diagonal Gaussians from a random
//! Fourier sketch: add the atom most correlated with the residual, prune back
//! to `k` atoms once the support overflows, reweight by NNLS and jointly
//! refine everything against the sketch cost.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use super::model::{CentroidModel, GmmModel};
use super::nnls::nnls_complex;
use super::optim::{minimize, Bounds};
use super::SolverOptions;
use crate::error::{invalid, Error, Result};
use crate::feature_map::{cis, FeatureMapSpec, MapKind, QUANTIZED_KERNEL_CONSTANT};
use crate::rng::{streams, SeedStream};
use crate::sketch::Sketch;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Dirac,
    /// Parameters are `(μ, log σ²)`.
    Gaussian,
}

struct Problem<'a> {
    w: &'a [f64],
    m: usize,
    d: usize,
    family: Family,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        match self.family {
            Family::Dirac => self.d,
            Family::Gaussian => 2 * self.d,
        }
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.w[j * self.d..(j + 1) * self.d]
    }

    fn atom(&self, theta: &[f64]) -> Vec<Complex64> {
        let d = self.d;
        let var: Vec<f64> = match self.family {
            Family::Dirac => Vec::new(),
            Family::Gaussian => theta[d..].iter().map(|v| v.exp()).collect(),
        };
        (0..self.m)
            .map(|j| {
                let w = self.row(j);
                let phase: f64 = w.iter().zip(&theta[..d]).map(|(a, b)| a * b).sum();
                let a = cis(-TAU * phase);
                if var.is_empty() {
                    a
                } else {
                    let spread: f64 = w.iter().zip(&var).map(|(a, s)| a * a * s).sum();
                    a * (-2.0 * PI * PI * spread).exp()
                }
            })
            .collect()
    }

    /// Gradient in `θ` of `Re Σ_j conj(v_j) A_j(θ)`, given `atom = A(θ)`.
    fn re_vjp(&self, theta: &[f64], atom: &[Complex64], v: &[Complex64]) -> Vec<f64> {
        let d = self.d;
        let mut g = vec![0.0; self.dim()];
        for j in 0..self.m {
            let q = v[j].conj() * atom[j];
            let w = self.row(j);
            let im = TAU * q.im;
            for t in 0..d {
                g[t] += w[t] * im;
            }
            if self.family == Family::Gaussian {
                let re = -2.0 * PI * PI * q.re;
                for t in 0..d {
                    g[d + t] += re * w[t] * w[t];
                }
            }
        }
        if self.family == Family::Gaussian {
            for t in 0..d {
                g[d + t] *= theta[d + t].exp();
            }
        }
        g
    }

    /// Negated normalized correlation `-Re⟨r, A(θ)⟩ / ‖A(θ)‖` and its gradient.
    fn correlation(&self, theta: &[f64], r: &[Complex64]) -> (f64, Vec<f64>) {
        let a = self.atom(theta);
        let norm = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return (0.0, vec![0.0; self.dim()]);
        }
        let c: f64 = a.iter().zip(r).map(|(x, y)| (y.conj() * x).re).sum();
        let gc = self.re_vjp(theta, &a, r);
        let gn = self.re_vjp(theta, &a, &a);
        let grad = gc
            .iter()
            .zip(&gn)
            .map(|(gc, gn)| -(gc / norm - c * gn / (norm * norm * norm)))
            .collect();
        (-c / norm, grad)
    }

    /// `‖z − Σ α_ℓ A(θ_ℓ)‖²` over the packed vector `[θ_1 … θ_k, α_1 … α_k]`.
    fn joint_cost(&self, x: &[f64], z: &[Complex64], k: usize) -> (f64, Vec<f64>) {
        let p = self.dim();
        let atoms: Vec<Vec<Complex64>> = (0..k).map(|l| self.atom(&x[l * p..(l + 1) * p])).collect();
        let alpha = &x[k * p..];
        let r = residual(z, &atoms, alpha);
        let f = r.iter().map(|v| v.norm_sqr()).sum();
        let mut g = vec![0.0; x.len()];
        for l in 0..k {
            let theta = &x[l * p..(l + 1) * p];
            let gt = self.re_vjp(theta, &atoms[l], &r);
            for (gi, v) in g[l * p..(l + 1) * p].iter_mut().zip(gt) {
                *gi = -2.0 * alpha[l] * v;
            }
            g[k * p + l] = -2.0 * atoms[l].iter().zip(&r).map(|(a, r)| (r.conj() * a).re).sum::<f64>();
        }
        (f, g)
    }
}

fn residual(z: &[Complex64], atoms: &[Vec<Complex64>], alpha: &[f64]) -> Vec<Complex64> {
    let mut r = z.to_vec();
    for (a, w) in atoms.iter().zip(alpha) {
        for (ri, ai) in r.iter_mut().zip(a) {
            *ri -= ai * w;
        }
    }
    r
}

fn cost(z: &[Complex64], atoms: &[Vec<Complex64>], alpha: &[f64]) -> f64 {
    residual(z, atoms, alpha).iter().map(|v| v.norm_sqr()).sum()
}

/// The complex target the solvers fit. Quantized sketches are mapped to the
/// equivalent complex problem: `‖z_q/c − Σ α A_ξ‖² = ‖(z_q/c)·e^{i2πξ} − Σ α A‖²`
/// because the dithered atom is `A_ξ = e^{−i2πξ} A`.
pub(crate) fn effective_target(sketch: &Sketch, spec: &FeatureMapSpec) -> Result<Vec<Complex64>> {
    if sketch.fingerprint() != spec.fingerprint() {
        return Err(Error::IncompatibleSketch);
    }
    match spec.kind() {
        MapKind::RffComplex => Ok(sketch.values().to_vec()),
        MapKind::RffQuantized => Ok(sketch
            .values()
            .iter()
            .zip(spec.dither())
            .map(|(v, xi)| cis(TAU * xi) * (v.re / QUANTIZED_KERNEL_CONSTANT))
            .collect()),
        kind => Err(Error::UnsupportedKind {
            kind: kind.name(),
            operation: "mixture recovery",
        }),
    }
}

/// A parametric model whose sketch is a weighted sum of atoms.
pub trait MixtureModel {
    fn weights(&self) -> &[f64];
    fn atom(&self, spec: &FeatureMapSpec, component: usize) -> Result<Vec<Complex64>>;
}

impl MixtureModel for CentroidModel {
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn atom(&self, spec: &FeatureMapSpec, l: usize) -> Result<Vec<Complex64>> {
        match spec.kind() {
            MapKind::RffQuantized => dirac_like(spec, &self.centroids[l], None),
            _ => spec.dirac_atom(&self.centroids[l]),
        }
    }
}

impl MixtureModel for GmmModel {
    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn atom(&self, spec: &FeatureMapSpec, l: usize) -> Result<Vec<Complex64>> {
        match spec.kind() {
            MapKind::RffQuantized => dirac_like(spec, &self.means[l], Some(&self.variances[l])),
            _ => spec.gaussian_atom(&self.means[l], &self.variances[l]),
        }
    }
}

/// Undithered complex atoms for a quantized map, which shares its operator
/// with the equivalent complex problem.
fn dirac_like(spec: &FeatureMapSpec, mu: &[f64], var: Option<&[f64]>) -> Result<Vec<Complex64>> {
    let op = spec.operator().expect("quantized map has an operator");
    if mu.len() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: mu.len(),
        });
    }
    let problem = Problem {
        w: op.rows(),
        m: spec.m(),
        d: spec.d(),
        family: if var.is_some() { Family::Gaussian } else { Family::Dirac },
    };
    let mut theta = mu.to_vec();
    if let Some(v) = var {
        theta.extend(v.iter().map(|s| s.ln()));
    }
    Ok(problem.atom(&theta))
}

/// `‖z̃ − Σ_ℓ α_ℓ A(θ_ℓ)‖²`. For quantized sketches `z̃` is the rescaled,
/// de-dithered target used by the solvers.
pub fn sketch_cost<M: MixtureModel>(model: &M, sketch: &Sketch, spec: &FeatureMapSpec) -> Result<f64> {
    let z = effective_target(sketch, spec)?;
    let atoms = (0..model.weights().len())
        .map(|l| model.atom(spec, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(cost(&z, &atoms, model.weights()))
}

struct Fit {
    thetas: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

fn clomp(sketch: &Sketch, k: usize, spec: &FeatureMapSpec, opts: &SolverOptions, family: Family) -> Result<Fit> {
    opts.validate()?;
    let z = effective_target(sketch, spec)?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let (m, d) = (spec.m(), spec.d());
    if k > m {
        return Err(invalid(format!("k = {k} exceeds the sketch size m = {m}")));
    }
    let search_box = opts.require_box(d)?;
    let op = spec.operator().expect("random Fourier maps have an operator");
    let problem = Problem {
        w: op.rows(),
        m,
        d,
        family,
    };
    let p = problem.dim();

    // Variances live in log space between the floor and the squared box width.
    let kernel_width = 1.0 / (TAU * spec.sigma_w());
    let log_floor = opts.variance_floor.ln();
    let log_cap = (search_box.max_width().max(kernel_width).powi(2)).ln().max(log_floor);
    let mut lower = search_box.lower.clone();
    let mut upper = search_box.upper.clone();
    if family == Family::Gaussian {
        lower.extend(std::iter::repeat_n(log_floor, d));
        upper.extend(std::iter::repeat_n(log_cap, d));
    }
    let log_init = (kernel_width * kernel_width).ln().clamp(log_floor, log_cap);

    let mut rng = SeedStream::new(opts.seed, streams::SOLVER);
    let mut thetas: Vec<Vec<f64>> = Vec::new();
    let mut atoms: Vec<Vec<Complex64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Fit)> = None;

    for pass in 1..=2 * k {
        let r = residual(&z, &atoms, &alpha);
        let inits: Vec<Vec<f64>> = (0..opts.restarts)
            .map(|_| {
                let mut theta: Vec<f64> = (0..d)
                    .map(|t| rng.uniform_range(search_box.lower[t], search_box.upper[t]))
                    .collect();
                if family == Family::Gaussian {
                    theta.extend(std::iter::repeat_n(log_init, d));
                }
                theta
            })
            .collect();
        let bounds = Bounds {
            lower: &lower,
            upper: &upper,
        };
        let candidates: Vec<(f64, Vec<f64>)> = inits
            .into_par_iter()
            .map(|theta| {
                let res = minimize(
                    |x| problem.correlation(x, &r),
                    theta,
                    Some(bounds),
                    opts.tolerance,
                    opts.max_iterations,
                );
                (res.f, res.x)
            })
            .collect();
        // Strict comparison keeps the smallest restart index on ties.
        let mut pick = 0;
        for (i, c) in candidates.iter().enumerate() {
            if c.0 < candidates[pick].0 {
                pick = i;
            }
        }
        let theta = candidates.into_iter().nth(pick).expect("at least one restart").1;
        atoms.push(problem.atom(&theta));
        thetas.push(theta);

        if thetas.len() > k {
            let normalized: Vec<Vec<Complex64>> = atoms
                .iter()
                .map(|a| {
                    let n = a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    a.iter().map(|v| v / n).collect()
                })
                .collect();
            let beta = nnls_complex(&normalized, &z);
            let mut drop = 0;
            for (i, b) in beta.iter().enumerate() {
                if *b < beta[drop] {
                    drop = i;
                }
            }
            thetas.remove(drop);
            atoms.remove(drop);
        }
        alpha = nnls_complex(&atoms, &z);

        let t = thetas.len();
        let mut x: Vec<f64> = thetas.iter().flatten().copied().collect();
        x.extend_from_slice(&alpha);
        let mut jl = Vec::with_capacity(x.len());
        let mut ju = Vec::with_capacity(x.len());
        for _ in 0..t {
            jl.extend_from_slice(&lower);
            ju.extend_from_slice(&upper);
        }
        jl.extend(std::iter::repeat_n(0.0, t));
        ju.extend(std::iter::repeat_n(f64::INFINITY, t));
        let refined = minimize(
            |x| problem.joint_cost(x, &z, t),
            x,
            Some(Bounds {
                lower: &jl,
                upper: &ju,
            }),
            opts.tolerance,
            opts.max_iterations,
        );
        thetas = refined.x[..t * p].chunks(p).map(<[f64]>::to_vec).collect();
        alpha = refined.x[t * p..].to_vec();
        atoms = thetas.iter().map(|th| problem.atom(th)).collect();

        if pass >= k {
            let total: f64 = alpha.iter().sum();
            let weights: Vec<f64> = if total > 0.0 {
                alpha.iter().map(|a| a / total).collect()
            } else {
                vec![1.0 / t as f64; t]
            };
            let c = cost(&z, &atoms, &weights);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((
                    c,
                    Fit {
                        thetas: thetas.clone(),
                        weights,
                    },
                ));
            }
        }
    }
    let (_, fit) = best.expect("at least one pass reaches the full support");
    if fit.thetas.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("recovered parameters are not finite".into()));
    }
    Ok(fit)
}

/// Compressive k-means: `k` weighted centroids fitted to a random Fourier
/// (complex or quantized) sketch.
pub fn clomp_kmeans(sketch: &Sketch, k: usize, spec: &FeatureMapSpec, opts: &SolverOptions) -> Result<CentroidModel> {
    let fit = clomp(sketch, k, spec, opts, Family::Dirac)?;
    let mut model = CentroidModel::new(fit.thetas, fit.weights)?;
    model.canonicalize();
    Ok(model)
}

/// Compressive diagonal GMM estimation.
pub fn clomp_gmm(sketch: &Sketch, k: usize, spec: &FeatureMapSpec, opts: &SolverOptions) -> Result<GmmModel> {
    let fit = clomp(sketch, k, spec, opts, Family::Gaussian)?;
    let d = spec.d();
    let means = fit.thetas.iter().map(|th| th[..d].to_vec()).collect();
    let variances = fit
        .thetas
        .iter()
        .map(|th| th[d..].iter().map(|v| v.exp().max(opts.variance_floor)).collect())
        .collect();
    let mut model = GmmModel::new(fit.weights, means, variances)?;
    model.canonicalize();
    Ok(model)
}
