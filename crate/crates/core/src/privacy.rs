//! Differentially private release of sketches.
//!
//! Neighbouring datasets differ by replacing one sample, with `n` public.
//! Noise is added to the mean sketch, so both sensitivities already carry
//! the `1/n` factor. Complex sketches are treated as `2m` real coordinates;
//! real-valued sketches as `m`.

use crate::error::{invalid, Error, Result};
use crate::feature_map::{FeatureMapSpec, MapKind};
use crate::rng::{streams, SeedStream};
use crate::sketch::{Mechanism, PrivacyRecord, Sketch};

/// Replace-one sensitivities of the mean sketch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityBounds {
    pub l1: f64,
    pub l2: f64,
}

fn rff_bounds(kind: MapKind, m: usize, n: u64) -> Result<SensitivityBounds> {
    if n == 0 {
        return Err(invalid("sensitivity needs n >= 1"));
    }
    let (m, n) = (m as f64, n as f64);
    match kind {
        // Each complex coordinate moves by at most 2 in modulus, and
        // |Re| + |Im| <= √2·modulus.
        MapKind::RffComplex => Ok(SensitivityBounds {
            l1: 2.0 * std::f64::consts::SQRT_2 * m / n,
            l2: 2.0 * m.sqrt() / n,
        }),
        MapKind::RffQuantized => Ok(SensitivityBounds {
            l1: 2.0 * m / n,
            l2: 2.0 * m.sqrt() / n,
        }),
        kind => Err(Error::UnsupportedKind {
            kind: kind.name(),
            operation: "sensitivity without a data radius",
        }),
    }
}

/// Sensitivity of a sketch over `n` samples.
///
/// Quadratic and outer-product maps are unbounded unless every sample
/// satisfies `‖x‖ ≤ radius`; pass that radius for those kinds.
pub fn sensitivity(spec: &FeatureMapSpec, n: u64, radius: Option<f64>) -> Result<SensitivityBounds> {
    match (spec.kind(), radius) {
        (MapKind::RffComplex | MapKind::RffQuantized, _) => rff_bounds(spec.kind(), spec.m(), n),
        (kind, None) => Err(Error::UnsupportedKind {
            kind: kind.name(),
            operation: "sensitivity without a data radius (supply --radius)",
        }),
        (kind, Some(r)) => {
            if n == 0 {
                return Err(invalid("sensitivity needs n >= 1"));
            }
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid(format!("radius must be nonnegative, got {r}")));
            }
            let n = n as f64;
            let r2 = r * r;
            if kind == MapKind::Quadratic {
                // (w_jᵀx)² ∈ [0, ‖w_j‖² r²] for every coordinate.
                let op = spec.operator().expect("quadratic map has an operator");
                let (mut l1, mut l2sq) = (0.0, 0.0);
                for j in 0..spec.m() {
                    let w2: f64 = op.row(j).iter().map(|w| w * w).sum();
                    l1 += w2 * r2;
                    l2sq += (w2 * r2).powi(2);
                }
                Ok(SensitivityBounds {
                    l1: l1 / n,
                    l2: l2sq.sqrt() / n,
                })
            } else {
                // ‖xxᵀ - yyᵀ‖_F² = ‖x‖⁴ + ‖y‖⁴ - 2(xᵀy)² ≤ 2r⁴ and ‖xxᵀ‖₁ = ‖x‖₁² ≤ d r².
                let d = spec.d() as f64;
                Ok(SensitivityBounds {
                    l1: 2.0 * d * r2 / n,
                    l2: std::f64::consts::SQRT_2 * r2 / n,
                })
            }
        }
    }
}

/// Standard deviation of the classic Gaussian mechanism.
pub fn gaussian_noise_scale(l2: f64, epsilon: f64, delta: f64) -> f64 {
    l2 * (2.0 * (1.25 / delta).ln()).sqrt() / epsilon
}

fn add_noise(s: &Sketch, scale: f64, mut draw: impl FnMut() -> f64) -> Vec<num_complex::Complex64> {
    let complex = s.kind().is_complex();
    s.values()
        .iter()
        .map(|v| {
            let re = v.re + scale * draw();
            let im = if complex { v.im + scale * draw() } else { v.im };
            num_complex::Complex64::new(re, im)
        })
        .collect()
}

fn check_open(s: &Sketch) -> Result<()> {
    if s.is_sealed() {
        Err(Error::SealedSketch)
    } else {
        Ok(())
    }
}

/// ε-DP release with iid Laplace noise of scale `l1/ε` per real coordinate.
pub fn privatize_laplace_with(s: &Sketch, bounds: SensitivityBounds, epsilon: f64, seed: u64) -> Result<Sketch> {
    check_open(s)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let b = bounds.l1 / epsilon;
    let mut rng = SeedStream::new(seed, streams::LAPLACE_NOISE);
    let values = add_noise(s, b, || rng.laplace());
    Ok(s.with_privacy(
        values,
        PrivacyRecord {
            mechanism: Mechanism::Laplace,
            epsilon,
            delta: 0.0,
        },
    ))
}

/// Laplace release using the analytic bound of a random Fourier sketch.
pub fn privatize_laplace(s: &Sketch, epsilon: f64, seed: u64) -> Result<Sketch> {
    check_open(s)?;
    let bounds = rff_bounds(s.kind(), s.m(), s.n())?;
    privatize_laplace_with(s, bounds, epsilon, seed)
}

/// (ε, δ)-DP release with iid Gaussian noise, `ε ∈ (0, 1]`, `δ ∈ (0, 1)`.
pub fn privatize_gaussian_with(
    s: &Sketch,
    bounds: SensitivityBounds,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<Sketch> {
    check_open(s)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("gaussian mechanism needs epsilon in (0, 1], got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let sigma = gaussian_noise_scale(bounds.l2, epsilon, delta);
    let mut rng = SeedStream::new(seed, streams::GAUSSIAN_NOISE);
    let values = add_noise(s, sigma, || rng.gaussian());
    Ok(s.with_privacy(
        values,
        PrivacyRecord {
            mechanism: Mechanism::Gaussian,
            epsilon,
            delta,
        },
    ))
}

pub fn privatize_gaussian(s: &Sketch, epsilon: f64, delta: f64, seed: u64) -> Result<Sketch> {
    check_open(s)?;
    let bounds = rff_bounds(s.kind(), s.m(), s.n())?;
    privatize_gaussian_with(s, bounds, epsilon, delta, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::sketch_dataset;
    use crate::transform::OperatorKind;

    fn rff(m: usize) -> FeatureMapSpec {
        FeatureMapSpec::new_rff_complex(m, 2, 1.0, OperatorKind::Dense, 1).unwrap()
    }

    #[test]
    fn analytic_constants() {
        let b = sensitivity(&rff(10), 100, None).unwrap();
        assert!((b.l1 - 0.282_842_712_474_619).abs() < 1e-12);
        assert!((b.l2 - 2.0 * 10f64.sqrt() / 100.0).abs() < 1e-15);
        let q = FeatureMapSpec::new_rff_quantized(10, 2, 1.0, OperatorKind::Dense, 1, 2).unwrap();
        let bq = sensitivity(&q, 100, None).unwrap();
        assert!((bq.l1 - 0.2).abs() < 1e-15);
        let half = sensitivity(&rff(10), 200, None).unwrap();
        assert_eq!(half.l1, b.l1 / 2.0);
        assert_eq!(half.l2, b.l2 / 2.0);
        for bound in [b, bq] {
            assert!(bound.l2 <= bound.l1 && bound.l1 <= bound.l2 * (20f64).sqrt() + 1e-15);
        }
    }

    #[test]
    fn unbounded_kinds_need_radius() {
        let quad = FeatureMapSpec::new_quadratic(6, 3, 1.0, OperatorKind::Dense, 1).unwrap();
        assert!(matches!(sensitivity(&quad, 10, None), Err(Error::UnsupportedKind { .. })));
        assert!(sensitivity(&quad, 10, Some(2.0)).is_ok());
        let outer = FeatureMapSpec::new_outer_product(3).unwrap();
        assert!(sensitivity(&outer, 10, None).is_err());
        assert!(sensitivity(&outer, 10, Some(1.0)).is_ok());
    }

    #[test]
    fn gaussian_scale_formula() {
        let b = sensitivity(&rff(100), 10_000, None).unwrap();
        assert!((b.l2 - 2.0 * 10.0 / 1e4).abs() < 1e-18);
        let sigma = gaussian_noise_scale(b.l2, 1.0, 1e-5);
        assert!((sigma - b.l2 * (2.0 * (1.25e5f64).ln()).sqrt()).abs() < 1e-15);
        assert!(gaussian_noise_scale(b.l2, 1.0, 1e-7) > sigma);
    }

    #[test]
    fn sealing_and_parameter_checks() {
        let spec = rff(8);
        let s = sketch_dataset([[0.0, 1.0], [1.0, 0.0]], &spec).unwrap();
        let p = privatize_laplace(&s, 1.0, 3).unwrap();
        assert!(p.is_sealed());
        assert_eq!(privatize_laplace(&p, 1.0, 3), Err(Error::SealedSketch));
        assert_eq!(p.merge(&s), Err(Error::SealedSketch));
        assert_eq!(s.merge(&p), Err(Error::SealedSketch));
        assert_eq!(p.update(&spec, &[0.0, 0.0]), Err(Error::SealedSketch));
        assert_eq!(p.delete(&spec, &[0.0, 1.0]), Err(Error::SealedSketch));
        assert!(privatize_gaussian(&s, 1.5, 1e-5, 1).is_err());
        assert!(privatize_gaussian(&s, 0.5, 0.0, 1).is_err());
        assert!(privatize_laplace(&s, 0.0, 1).is_err());
        assert_eq!(privatize_laplace(&s, 2.0, 9).unwrap(), privatize_laplace(&s, 2.0, 9).unwrap());
        let g = privatize_gaussian(&s, 0.5, 1e-6, 9).unwrap();
        assert_eq!(g.privacy().unwrap().mechanism, Mechanism::Gaussian);
    }

    #[test]
    fn real_maps_stay_real() {
        let q = FeatureMapSpec::new_rff_quantized(16, 2, 1.0, OperatorKind::Dense, 1, 5).unwrap();
        let s = sketch_dataset([[0.3, 0.1]], &q).unwrap();
        let p = privatize_laplace(&s, 1.0, 1).unwrap();
        assert!(p.values().iter().all(|v| v.im == 0.0));
    }
}
