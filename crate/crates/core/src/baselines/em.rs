use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::solvers::model::{diag_gaussian_log_pdf, log_sum_exp};
use crate::solvers::{GmmModel, VARIANCE_FLOOR};

use super::lloyd::lloyd_kmeans;

const MAX_ITERATIONS: usize = 500;
const REL_TOL: f64 = 1e-10;

fn mean_log_likelihood(data: &DataMatrix, model: &GmmModel) -> f64 {
    data.rows().map(|x| model.log_density(x)).sum::<f64>() / data.n() as f64
}

/// Diagonal-covariance EM started from a Lloyd solution; also returns the
/// mean log-likelihood after each iteration.
pub fn em_gmm_with_trace(data: &DataMatrix, k: usize, seed: u64) -> Result<(GmmModel, Vec<f64>)> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let (n, d) = (data.n(), data.d());
    let init = lloyd_kmeans(data, k, seed)?;
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for x in data.rows() {
        let l = init
            .centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        counts[l] += 1.0;
        for (t, v) in x.iter().enumerate() {
            sums[l][t] += (v - init.centroids[l][t]).powi(2);
        }
    }
    let global_var: Vec<f64> = {
        let mean = data.mean();
        (0..d)
            .map(|t| data.rows().map(|x| (x[t] - mean[t]).powi(2)).sum::<f64>() / n as f64)
            .collect()
    };
    let variances: Vec<Vec<f64>> = (0..k)
        .map(|l| {
            (0..d)
                .map(|t| {
                    let v = if counts[l] > 1.0 { sums[l][t] / counts[l] } else { global_var[t] };
                    v.max(VARIANCE_FLOOR)
                })
                .collect()
        })
        .collect();
    let mut model = GmmModel::normalized(counts.clone(), init.centroids.clone(), variances)?;

    let mut ll = mean_log_likelihood(data, &model);
    let mut trace = vec![ll];
    let mut resp = vec![0.0; n * k];
    for _ in 0..MAX_ITERATIONS {
        for (i, x) in data.rows().enumerate() {
            let logs: Vec<f64> = (0..k)
                .map(|l| {
                    if model.weights[l] > 0.0 {
                        model.weights[l].ln() + diag_gaussian_log_pdf(x, &model.means[l], &model.variances[l])
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let norm = log_sum_exp(&logs);
            for l in 0..k {
                resp[i * k + l] = (logs[l] - norm).exp();
            }
        }
        let mut weights = vec![0.0; k];
        let mut means = vec![vec![0.0; d]; k];
        let mut vars = vec![vec![0.0; d]; k];
        for (i, x) in data.rows().enumerate() {
            for l in 0..k {
                let r = resp[i * k + l];
                weights[l] += r;
                for t in 0..d {
                    means[l][t] += r * x[t];
                }
            }
        }
        for l in 0..k {
            if weights[l] > 0.0 {
                means[l].iter_mut().for_each(|m| *m /= weights[l]);
            } else {
                means[l] = model.means[l].clone();
            }
        }
        for (i, x) in data.rows().enumerate() {
            for l in 0..k {
                let r = resp[i * k + l];
                for t in 0..d {
                    vars[l][t] += r * (x[t] - means[l][t]).powi(2);
                }
            }
        }
        for l in 0..k {
            for t in 0..d {
                vars[l][t] = if weights[l] > 0.0 {
                    (vars[l][t] / weights[l]).max(VARIANCE_FLOOR)
                } else {
                    model.variances[l][t]
                };
            }
        }
        let next = GmmModel::normalized(weights, means, vars)?;
        let next_ll = mean_log_likelihood(data, &next);
        assert!(
            next_ll >= ll - 1e-9 * ll.abs().max(1.0),
            "EM log-likelihood decreased from {ll} to {next_ll}"
        );
        let gain = next_ll - ll;
        model = next;
        ll = next_ll;
        trace.push(ll);
        if gain <= REL_TOL * ll.abs().max(1.0) {
            break;
        }
    }
    model.canonicalize();
    Ok((model, trace))
}

pub fn em_gmm(data: &DataMatrix, k: usize, seed: u64) -> Result<GmmModel> {
    em_gmm_with_trace(data, k, seed).map(|(m, _)| m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{synth_gmm, SyntheticSpec};

    #[test]
    fn single_component_is_sample_moments() {
        let spec = SyntheticSpec::new(1, 2, 2000, 3.0, 0.7, 3);
        let s = synth_gmm(&spec).unwrap();
        let m = em_gmm(&s.data, 1, 0).unwrap();
        let mean = s.data.mean();
        for t in 0..2 {
            assert!((m.means[0][t] - mean[t]).abs() < 1e-10);
            let var = s.data.rows().map(|x| (x[t] - mean[t]).powi(2)).sum::<f64>() / 2000.0;
            assert!((m.variances[0][t] - var).abs() < 1e-10);
        }
    }

    #[test]
    fn likelihood_is_monotone() {
        for seed in 0..100 {
            let spec = SyntheticSpec::new(3, 2, 150, 2.0, 1.0, seed);
            let s = synth_gmm(&spec).unwrap();
            let (_, trace) = em_gmm_with_trace(&s.data, 3, seed).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn separated_mixture_recovers_truth() {
        let spec = SyntheticSpec::new(2, 3, 20_000, 10.0, 0.5, 9);
        let s = synth_gmm(&spec).unwrap();
        let m = em_gmm(&s.data, 2, 1).unwrap();
        for truth_l in 0..2 {
            let mu = &s.truth.means[truth_l];
            let best = (0..2)
                .min_by(|&a, &b| {
                    let da: f64 = m.means[a].iter().zip(mu).map(|(x, y)| (x - y).powi(2)).sum();
                    let db: f64 = m.means[b].iter().zip(mu).map(|(x, y)| (x - y).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            for t in 0..3 {
                assert!((m.means[best][t] - mu[t]).abs() < 0.05 * 0.5);
                assert!((m.variances[best][t] / 0.25 - 1.0).abs() < 0.05);
            }
            assert!((m.weights[best] - 0.5).abs() < 0.02);
        }
    }
}
