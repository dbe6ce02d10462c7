use std::f64::consts::{PI, TAU};
use std::time::Duration;

use compsketch::baselines::{exact_pca, kmeans_sse, lloyd_kmeans, synth_gmm, SyntheticData, SyntheticSpec};
use compsketch::feature_map::{expected_kernel, normalized_inner};
use compsketch::privacy::{privatize_gaussian, privatize_laplace, sensitivity, gaussian_noise_scale};
use compsketch::rng::SeedStream;
use compsketch::scan::{count_local_maxima, criterion_grid, parzen_grid, pearson};
use compsketch::sketch::{sketch_dataset, sketch_parallel};
use compsketch::solvers::{
    clomp_gmm, clomp_kmeans, fit_lowrank_psd, lowrank_objective, ls_regression, SearchBox, SolverOptions,
};
use compsketch::{DataMatrix, FeatureMapSpec, FrequencyOperator, OperatorKind, Sketch};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Check, Outcome};

pub fn all() -> Vec<Check> {
    let secs = Duration::from_secs;
    vec![
        Check { id: 1, name: "merge_algebra", budget: secs(10), run: merge_algebra },
        Check { id: 2, name: "lln_noise_decay", budget: secs(120), run: lln_noise_decay },
        Check { id: 3, name: "expected_kernel", budget: secs(30), run: expected_kernel_mc },
        Check { id: 4, name: "structured_equals_dense", budget: secs(10), run: structured_equals_dense },
        Check { id: 5, name: "compressive_kmeans", budget: secs(300), run: compressive_kmeans },
        Check { id: 6, name: "compressive_gmm", budget: secs(300), run: compressive_gmm },
        Check { id: 7, name: "compressive_pca", budget: secs(120), run: compressive_pca },
        Check { id: 8, name: "sketched_regression", budget: secs(10), run: sketched_regression },
        Check { id: 9, name: "quantized_kernel_constant", budget: secs(60), run: quantized_constant },
        Check { id: 10, name: "quantized_learning", budget: secs(300), run: quantized_learning },
        Check { id: 11, name: "privacy_calibration", budget: secs(180), run: privacy_calibration },
        Check { id: 12, name: "smoothing_regimes", budget: secs(120), run: smoothing_regimes },
        Check { id: 13, name: "analytic_gradients", budget: secs(60), run: analytic_gradients },
    ]
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn gaussian_rows(rng: &mut SeedStream, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| scale * rng.gaussian()).collect()).collect()
}

fn merge_algebra() -> Outcome {
    let spec = FeatureMapSpec::new_rff_complex(64, 3, 0.7, OperatorKind::Structured, 5).map_err(|e| e.to_string())?;
    let mut rng = SeedStream::new(101, 0);
    let mut worst_merge = 0.0f64;
    let mut worst_delete = 0.0f64;
    for _ in 0..100 {
        let n = 2 + rng.below(400);
        let rows = gaussian_rows(&mut rng, n, 3, 1.5);
        let cut = 1 + rng.below(n - 1);
        let whole = sketch_dataset(&rows, &spec).unwrap();
        let left = sketch_dataset(&rows[..cut], &spec).unwrap();
        let right = sketch_dataset(&rows[cut..], &spec).unwrap();
        let merged = left.merge(&right).unwrap();
        ensure(merged.n() == whole.n(), "merged count differs")?;
        worst_merge = worst_merge.max(max_rel(merged.values(), whole.values()));
        let x: Vec<f64> = (0..3).map(|_| 3.0 * rng.gaussian()).collect();
        let round = whole.update(&spec, &x).unwrap().delete(&spec, &x).unwrap();
        ensure(round.n() == whole.n(), "insert/delete count differs")?;
        worst_delete = worst_delete.max(max_rel(round.values(), whole.values()));
    }
    ensure(worst_merge < 1e-12, format!("merge error {worst_merge:.2e}"))?;
    ensure(worst_delete < 1e-12, format!("insert/delete error {worst_delete:.2e}"))?;
    Ok(format!("max merge error {worst_merge:.1e}, insert/delete error {worst_delete:.1e}"))
}

fn lln_noise_decay() -> Outcome {
    let (m, d) = (200, 2);
    let spec = FeatureMapSpec::new_rff_complex(m, d, 0.5, OperatorKind::Dense, 3).unwrap();
    let mu = [0.5, -1.0];
    let var = [0.3, 0.8];
    let truth = spec.gaussian_atom(&mu, &var).unwrap();
    let ns = [100usize, 1_000, 10_000, 100_000];
    let mut logs = Vec::new();
    for &n in &ns {
        let mut total = 0.0;
        for seed in 0..20 {
            let mut rng = SeedStream::new(seed, 77);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|t| mu[t] + var[t].sqrt() * rng.gaussian()).collect())
                .collect();
            let s = sketch_parallel(&DataMatrix::from_rows(&rows).unwrap(), &spec, 4096).unwrap();
            total += s.values().iter().zip(&truth).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        }
        logs.push(((n as f64).ln(), (total / 20.0).ln()));
    }
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let slope = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / logs.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>();
    ensure((slope + 0.5).abs() <= 0.1, format!("slope {slope:.3}"))?;
    Ok(format!("log-log slope {slope:.3}"))
}

fn expected_kernel_mc() -> Outcome {
    let m = 100_000;
    let sigma_w = 0.3;
    let spec = FeatureMapSpec::new_rff_complex(m, 3, sigma_w, OperatorKind::Dense, 8).unwrap();
    let mut rng = SeedStream::new(12, 0);
    let bound = 3.0 / (m as f64).sqrt();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.gaussian()).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.gaussian()).collect();
        let emp = normalized_inner(&spec.rff(&x).unwrap(), &spec.rff(&y).unwrap());
        worst = worst.max((emp - expected_kernel(sigma_w, &x, &y)).abs());
    }
    ensure(worst < bound, format!("max deviation {worst:.2e} vs bound {bound:.2e}"))?;
    Ok(format!("max deviation {worst:.2e} < {bound:.2e}"))
}

fn structured_equals_dense() -> Outcome {
    let mut rng = SeedStream::new(4, 0);
    let mut worst = 0.0f64;
    for d in [4usize, 64, 100] {
        for m in [d, 3 * d] {
            let op = FrequencyOperator::build_structured(m, d, 1.3, 99 + d as u64).unwrap();
            let rows = op.rows().to_vec();
            for _ in 0..5 {
                let x: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
                let fast = op.apply(&x).unwrap();
                let slow: Vec<f64> = rows.chunks(d).map(|r| r.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
                let scale = slow.iter().map(|v| v.abs()).fold(0.0, f64::max);
                let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
                worst = worst.max(err);
            }
        }
    }
    ensure(worst < 1e-12, format!("relative error {worst:.2e}"))?;
    Ok(format!("max relative error {worst:.1e}"))
}

/// The planar three-cluster benchmark: centers at least 2.5 apart inside
/// [−2, 2]², isotropic spread 0.25.
pub fn three_cluster(n: usize, seed: u64) -> SyntheticData {
    let mut spec = SyntheticSpec::new(3, 2, n, 10.0, 0.25, seed);
    spec.box_half_width = Some(2.0);
    synth_gmm(&spec).unwrap()
}

fn ten_cluster(n: usize, seed: u64) -> SyntheticData {
    synth_gmm(&SyntheticSpec::new(10, 10, n, 6.0, 1.0, seed)).unwrap()
}

fn best_lloyd(data: &DataMatrix, k: usize) -> f64 {
    (0..5)
        .map(|s| kmeans_sse(data, &lloyd_kmeans(data, k, s).unwrap().centroids))
        .fold(f64::INFINITY, f64::min)
}

fn best_clomp(data: &DataMatrix, sketch: &Sketch, spec: &FeatureMapSpec, k: usize) -> f64 {
    let bx = SearchBox::from_data(data).unwrap();
    (0..5)
        .map(|s| {
            let model = clomp_kmeans(sketch, k, spec, &SolverOptions::with_box(bx.clone(), s)).unwrap();
            kmeans_sse(data, &model.centroids)
        })
        .fold(f64::INFINITY, f64::min)
}

fn kmeans_ratio(data: &DataMatrix, k: usize, spec: &FeatureMapSpec) -> f64 {
    let sketch = sketch_parallel(data, spec, 4096).unwrap();
    best_clomp(data, &sketch, spec, k) / best_lloyd(data, k)
}

fn compressive_kmeans() -> Outcome {
    let a = three_cluster(10_000, 1);
    let spec_a = FeatureMapSpec::new_rff_complex(60, 2, 1.0 / (TAU * 0.3), OperatorKind::Dense, 21).unwrap();
    let ra = kmeans_ratio(&a.data, 3, &spec_a);
    let b = ten_cluster(10_000, 2);
    let spec_b = FeatureMapSpec::new_rff_complex(1000, 10, 1.0 / (TAU * 6.0), OperatorKind::Structured, 22).unwrap();
    let rb = kmeans_ratio(&b.data, 10, &spec_b);
    let detail = format!("SSE ratio k=3,d=2: {ra:.3}; k=10,d=10: {rb:.3}");
    ensure(ra <= 1.2 && rb <= 1.2, detail.clone())?;
    Ok(detail)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for i in 0..k {
            let mut q = p.clone();
            q.insert(i, k - 1);
            out.push(q);
        }
    }
    out
}

fn compressive_gmm() -> Outcome {
    let (k, d, sigma) = (2, 5, 0.5);
    let syn = synth_gmm(&SyntheticSpec::new(k, d, 100_000, 10.0, sigma, 6)).unwrap();
    let m = 20 * (2 * d + 1) * k;
    let spec = FeatureMapSpec::new_rff_complex(m, d, 1.0 / (TAU * sigma), OperatorKind::Dense, 31).unwrap();
    let sketch = sketch_parallel(&syn.data, &spec, 8192).unwrap();
    let opts = SolverOptions::with_box(SearchBox::from_data(&syn.data).unwrap(), 3);
    let model = clomp_gmm(&sketch, k, &spec, &opts).map_err(|e| e.to_string())?;
    let truth = &syn.truth;
    let (mut best_mean, mut best_var) = (f64::INFINITY, f64::INFINITY);
    for p in permutations(k) {
        let mut mean_err = 0.0f64;
        let mut var_err = 0.0f64;
        for (l, &q) in p.iter().enumerate() {
            for t in 0..d {
                mean_err = mean_err.max((model.means[q][t] - truth.means[l][t]).abs() / sigma);
                var_err = var_err.max((model.variances[q][t] / truth.variances[l][t] - 1.0).abs());
            }
        }
        if mean_err < best_mean {
            best_mean = mean_err;
            best_var = var_err;
        }
    }
    let detail = format!("max mean error {best_mean:.3}σ, max variance error {:.1}%", 100.0 * best_var);
    ensure(best_mean < 0.1 && best_var < 0.15, detail.clone())?;
    Ok(detail)
}

fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let s = (a.transpose() * b).singular_values();
    s.min().min(1.0).acos()
}

fn compressive_pca() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = SeedStream::new(41, 0);
    for (k, d) in [(1usize, 10usize), (1, 20), (3, 10), (3, 20)] {
        let basis = DMatrix::from_fn(d, k, |_, _| rng.gaussian());
        let basis = basis.qr().q();
        let rows: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let coef: Vec<f64> = (0..k).map(|l| (1.0 + l as f64) * rng.gaussian()).collect();
                (0..d)
                    .map(|t| (0..k).map(|l| basis[(t, l)] * coef[l]).sum::<f64>() + 0.01 * rng.gaussian())
                    .collect()
            })
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let spec = FeatureMapSpec::new_quadratic(6 * k * d, d, 1.0, OperatorKind::Dense, 50 + d as u64).unwrap();
        let sketch = sketch_parallel(&data, &spec, 4096).unwrap();
        let fit = fit_lowrank_psd(&sketch, k, &spec, &SolverOptions::default()).map_err(|e| e.to_string())?;
        let exact = exact_pca(&data, k).unwrap();
        worst = worst.max(principal_angle(&fit.subspace(), &exact));
    }
    ensure(worst < 0.05, format!("largest principal angle {worst:.4} rad"))?;
    Ok(format!("largest principal angle {worst:.2e} rad"))
}

fn sketched_regression() -> Outcome {
    let mut rng = SeedStream::new(61, 0);
    let mut worst_direct = 0.0f64;
    let mut worst_exact = 0.0f64;
    for _ in 0..20 {
        let d1 = 1 + rng.below(3);
        let d2 = 1 + rng.below(4);
        let d = d1 + d2;
        let n = 50 + rng.below(200);
        let theta = DMatrix::from_fn(d1, d2, |_, _| rng.gaussian());
        let mut rows = Vec::new();
        let mut exact_rows = Vec::new();
        for _ in 0..n {
            let x2: Vec<f64> = (0..d2).map(|_| rng.gaussian()).collect();
            let clean: Vec<f64> = (0..d1).map(|a| (0..d2).map(|b| theta[(a, b)] * x2[b]).sum()).collect();
            let mut noisy: Vec<f64> = clean.iter().map(|v| v + 0.3 * rng.gaussian()).collect();
            noisy.extend_from_slice(&x2);
            let mut exact = clean;
            exact.extend_from_slice(&x2);
            rows.push(noisy);
            exact_rows.push(exact);
        }
        let spec = FeatureMapSpec::new_outer_product(d).unwrap();
        let est = ls_regression(&sketch_dataset(&rows, &spec).unwrap(), d1, d2).map_err(|e| e.to_string())?;
        // Direct normal equations on the full data.
        let x1 = DMatrix::from_fn(n, d1, |i, a| rows[i][a]);
        let x2 = DMatrix::from_fn(n, d2, |i, b| rows[i][d1 + b]);
        let direct = (x2.transpose() * &x2).lu().solve(&(x2.transpose() * &x1)).unwrap().transpose();
        worst_direct = worst_direct.max((&est - &direct).norm() / direct.norm());
        let exact = ls_regression(&sketch_dataset(&exact_rows, &spec).unwrap(), d1, d2).unwrap();
        worst_exact = worst_exact.max((&exact - &theta).norm() / theta.norm());
    }
    let detail = format!("vs direct {worst_direct:.1e}, exact recovery {worst_exact:.1e}");
    ensure(worst_direct < 1e-10 && worst_exact < 1e-10, detail.clone())?;
    Ok(detail)
}

fn quantized_constant() -> Outcome {
    let (m, d) = (8, 2);
    let x = [0.3, -0.2];
    let y = [-0.1, 0.4];
    let trials = 100_000;
    let reference = FeatureMapSpec::new_rff_complex(m, d, 0.8, OperatorKind::Dense, 5).unwrap();
    let base: Complex64 = reference
        .rff(&x)
        .unwrap()
        .iter()
        .zip(reference.rff(&y).unwrap())
        .map(|(a, b)| a * b.conj())
        .sum();
    let mut samples = Vec::with_capacity(trials);
    for t in 0..trials {
        let q = FeatureMapSpec::new_rff_quantized(m, d, 0.8, OperatorKind::Dense, 5, t as u64).unwrap();
        let fq = q.rff_quantized(&x).unwrap();
        let fe = q.rff_dithered(&y).unwrap();
        let inner: Complex64 = fq.iter().zip(&fe).map(|(a, b)| b.conj() * a).sum();
        samples.push((inner / base).re);
    }
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    let target = 2.0 / PI;
    let z = (mean - target).abs() / se;
    let detail = format!("c = {mean:.5} ± {se:.5} (2/π = {target:.5}, {z:.2} SE)");
    ensure(z < 3.0, detail.clone())?;
    Ok(detail)
}

fn quantized_learning() -> Outcome {
    let syn = three_cluster(10_000, 1);
    let m = 60;
    let sigma_w = 1.0 / (TAU * 0.3);
    let complex = FeatureMapSpec::new_rff_complex(m, 2, sigma_w, OperatorKind::Dense, 21).unwrap();
    let mq = (1.25 * m as f64).round() as usize;
    let quant = FeatureMapSpec::new_rff_quantized(mq, 2, sigma_w, OperatorKind::Dense, 21, 23).unwrap();
    let sc = best_clomp(&syn.data, &sketch_parallel(&syn.data, &complex, 4096).unwrap(), &complex, 3);
    let sq = best_clomp(&syn.data, &sketch_parallel(&syn.data, &quant, 4096).unwrap(), &quant, 3);
    let detail = format!("SSE quantized (m={mq}) / complex (m={m}) = {:.4}", sq / sc);
    ensure(sq <= 1.1 * sc, detail.clone())?;
    Ok(detail)
}

fn privacy_calibration() -> Outcome {
    // Empirical replace-one sensitivity.
    let mut violations = 0;
    let mut rng = SeedStream::new(71, 0);
    let complex = FeatureMapSpec::new_rff_complex(16, 2, 1.0, OperatorKind::Dense, 3).unwrap();
    let quant = FeatureMapSpec::new_rff_quantized(16, 2, 1.0, OperatorKind::Dense, 3, 4).unwrap();
    let n = 10;
    let base_rows = gaussian_rows(&mut rng, n, 2, 1.0);
    for spec in [&complex, &quant] {
        let bound = sensitivity(spec, n as u64, None).unwrap();
        let base = sketch_dataset(&base_rows, spec).unwrap();
        for _ in 0..5_000 {
            let mut rows = base_rows.clone();
            let i = rng.below(n);
            rows[i] = vec![5.0 * rng.gaussian(), 5.0 * rng.gaussian()];
            let other = sketch_dataset(&rows, spec).unwrap();
            let (mut l1, mut l2) = (0.0, 0.0);
            for (a, b) in base.values().iter().zip(other.values()) {
                let dv = a - b;
                l1 += dv.re.abs() + dv.im.abs();
                l2 += dv.norm_sqr();
            }
            if l1 > bound.l1 * (1.0 + 1e-12) || l2.sqrt() > bound.l2 * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0, format!("{violations} sensitivity violations"))?;

    // Noise moments.
    let m = 50_000;
    let spec = FeatureMapSpec::new_rff_complex(m, 1, 1.0, OperatorKind::Structured, 9).unwrap();
    let s = sketch_dataset([[0.0]], &spec).unwrap();
    let bound = sensitivity(&spec, 1, None).unwrap();
    let mut moment_errors = Vec::new();
    for (label, noisy, sd) in [
        ("laplace", privatize_laplace(&s, 2.0, 5).unwrap(), std::f64::consts::SQRT_2 * bound.l1 / 2.0),
        ("gaussian", privatize_gaussian(&s, 0.5, 1e-5, 5).unwrap(), gaussian_noise_scale(bound.l2, 0.5, 1e-5)),
    ] {
        let noise: Vec<f64> = noisy
            .values()
            .iter()
            .zip(s.values())
            .flat_map(|(a, b)| [a.re - b.re, a.im - b.im])
            .collect();
        let mean = noise.iter().sum::<f64>() / noise.len() as f64;
        let emp_sd = (noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / noise.len() as f64).sqrt();
        let (me, se) = (mean.abs() / sd, (emp_sd / sd - 1.0).abs());
        ensure(me < 0.02 && se < 0.02, format!("{label} moments off: mean {me:.4}, sd {se:.4}"))?;
        moment_errors.push(format!("{label} sd error {:.2}%", 100.0 * se));
    }

    // Learning still works under ε = 10 with n = 10⁵.
    let syn = three_cluster(100_000, 1);
    let spec = FeatureMapSpec::new_rff_complex(60, 2, 1.0 / (TAU * 0.3), OperatorKind::Dense, 21).unwrap();
    let clean = sketch_parallel(&syn.data, &spec, 8192).unwrap();
    let private = privatize_laplace(&clean, 10.0, 17).unwrap();
    let ratio = best_clomp(&syn.data, &private, &spec, 3) / best_lloyd(&syn.data, 3);
    ensure(ratio <= 1.2, format!("private SSE ratio {ratio:.3}"))?;
    Ok(format!("0 violations; {}; private SSE ratio {ratio:.3}", moment_errors.join(", ")))
}

fn smoothing_regimes() -> Outcome {
    let syn = three_cluster(2_000, 3);
    let lower = [-3.0, -3.0];
    let upper = [3.0, 3.0];
    let mut counts = Vec::new();
    let mut r_mid = 0.0;
    for (i, width) in [0.045, 0.3, 1.5].into_iter().enumerate() {
        let spec = FeatureMapSpec::new_rff_complex(10_000, 2, 1.0 / (TAU * width), OperatorKind::Dense, 81).unwrap();
        let sketch = sketch_parallel(&syn.data, &spec, 1024).unwrap();
        let grid = criterion_grid(&sketch, &spec, lower, upper, 50, 50).unwrap();
        counts.push(count_local_maxima(&grid, 0.1));
        if i == 1 {
            let parzen = parzen_grid(&syn.data, width, lower, upper, 50, 50).unwrap();
            r_mid = pearson(&grid.values, &parzen.values);
        }
    }
    let detail = format!("local maxima {counts:?}, Pearson r {r_mid:.4}");
    ensure(counts[0] > 3 && counts[1] == 3 && counts[2] == 1 && r_mid > 0.95, detail.clone())?;
    Ok(detail)
}

fn analytic_gradients() -> Outcome {
    let d = 3;
    let spec = FeatureMapSpec::new_rff_complex(20, d, 0.7, OperatorKind::Dense, 91).unwrap();
    let mut rng = SeedStream::new(92, 0);
    let h = 1e-6;
    let rel = |fd: Complex64, an: Complex64, scale: f64| (fd - an).norm() / scale.max(1e-300);
    let (mut wd, mut wg, mut wl) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let c: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let jac = spec.dirac_jacobian(&c).unwrap();
        let scale = jac.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for t in 0..d {
            let (mut cp, mut cm) = (c.clone(), c.clone());
            cp[t] += h;
            cm[t] -= h;
            let (ap, am) = (spec.dirac_atom(&cp).unwrap(), spec.dirac_atom(&cm).unwrap());
            for j in 0..20 {
                wd = wd.max(rel((ap[j] - am[j]) / (2.0 * h), jac[j * d + t], scale));
            }
        }
        let mu: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let var: Vec<f64> = (0..d).map(|_| rng.uniform_range(0.05, 1.0)).collect();
        let jac = spec.gaussian_jacobian(&mu, &var).unwrap();
        let scale = jac.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for t in 0..2 * d {
            let (mut mp, mut mm, mut vp, mut vm) = (mu.clone(), mu.clone(), var.clone(), var.clone());
            if t < d {
                mp[t] += h;
                mm[t] -= h;
            } else {
                vp[t - d] += h;
                vm[t - d] -= h;
            }
            let ap = spec.gaussian_atom(&mp, &vp).unwrap();
            let am = spec.gaussian_atom(&mm, &vm).unwrap();
            for j in 0..20 {
                wg = wg.max(rel((ap[j] - am[j]) / (2.0 * h), jac[j * 2 * d + t], scale));
            }
        }
    }
    let quad = FeatureMapSpec::new_quadratic(30, 4, 1.0, OperatorKind::Structured, 93).unwrap();
    let rows = gaussian_rows(&mut rng, 40, 4, 1.0);
    let sketch = sketch_dataset(&rows, &quad).unwrap();
    for _ in 0..100 {
        let u = DMatrix::from_fn(4, 2, |_, _| rng.gaussian());
        let (_, g) = lowrank_objective(&sketch, &quad, &u).unwrap();
        let scale = g.amax();
        for i in 0..8 {
            let (mut up, mut um) = (u.clone(), u.clone());
            up[i] += h;
            um[i] -= h;
            let fp = lowrank_objective(&sketch, &quad, &up).unwrap().0;
            let fm = lowrank_objective(&sketch, &quad, &um).unwrap().0;
            wl = wl.max(((fp - fm) / (2.0 * h) - g[i]).abs() / scale);
        }
    }
    let detail = format!("max relative errors: dirac {wd:.1e}, gaussian {wg:.1e}, low-rank {wl:.1e}");
    ensure(wd < 1e-5 && wg < 1e-5 && wl < 1e-5, detail.clone())?;
    Ok(detail)
}
