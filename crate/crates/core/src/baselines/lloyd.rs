use crate::data::DataMatrix;
use crate::error::{invalid, Result};
use crate::rng::{streams, SeedStream};
use crate::solvers::CentroidModel;

const MAX_ITERATIONS: usize = 300;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(x: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, dist2(x, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one centroid")
}

/// Sum over samples of the squared distance to the nearest centroid.
pub fn kmeans_sse(data: &DataMatrix, centroids: &[Vec<f64>]) -> f64 {
    data.rows().map(|x| nearest(x, centroids).1).sum()
}

fn plus_plus_init(data: &DataMatrix, k: usize, rng: &mut SeedStream) -> Vec<Vec<f64>> {
    let n = data.n();
    let mut centroids = vec![data.row(rng.below(n)).to_vec()];
    let mut d2: Vec<f64> = data.rows().map(|x| dist2(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.uniform() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            rng.below(n)
        };
        let c = data.row(next).to_vec();
        for (di, x) in d2.iter_mut().zip(data.rows()) {
            *di = di.min(dist2(x, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd iterations from a k-means++ start; also returns the SSE after each iteration.
pub fn lloyd_kmeans_with_trace(data: &DataMatrix, k: usize, seed: u64) -> Result<(CentroidModel, Vec<f64>)> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    if data.n() < k {
        return Err(invalid(format!("need at least k={k} samples, got {}", data.n())));
    }
    let (n, d) = (data.n(), data.d());
    let mut rng = SeedStream::new(seed, streams::BASELINE);
    let mut centroids = plus_plus_init(data, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut prev_sse = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, x) in data.rows().enumerate() {
            let (l, dd) = nearest(x, &centroids);
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
            dists[i] = dd;
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, x) in data.rows().enumerate() {
            counts[labels[i]] += 1;
            for (s, v) in sums[labels[i]].iter_mut().zip(x) {
                *s += v;
            }
        }
        for l in 0..k {
            if counts[l] > 0 {
                centroids[l] = sums[l].iter().map(|s| s / counts[l] as f64).collect();
            }
        }
        // Empty clusters take the sample currently farthest from its centroid.
        for l in 0..k {
            if counts[l] == 0 {
                let far = data
                    .rows()
                    .enumerate()
                    .map(|(i, x)| (i, dist2(x, &centroids[labels[i]])))
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .expect("nonempty data");
                centroids[l] = data.row(far).to_vec();
                labels[far] = l;
            }
        }
        let sse = kmeans_sse(data, &centroids);
        assert!(
            sse <= prev_sse * (1.0 + 1e-12) + 1e-12,
            "Lloyd SSE increased from {prev_sse} to {sse}"
        );
        prev_sse = sse;
        trace.push(sse);
    }
    let mut counts = vec![0.0; k];
    for x in data.rows() {
        counts[nearest(x, &centroids).0] += 1.0;
    }
    let mut model = CentroidModel::normalized(centroids, counts)?;
    model.canonicalize();
    Ok((model, trace))
}

pub fn lloyd_kmeans(data: &DataMatrix, k: usize, seed: u64) -> Result<CentroidModel> {
    lloyd_kmeans_with_trace(data, k, seed).map(|(m, _)| m)
}
