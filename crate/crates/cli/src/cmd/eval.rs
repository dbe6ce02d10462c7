use std::path::Path;

use clap::Args;
use compsketch::baselines::{em_gmm, empirical_risk, exact_pca, kmeans_sse, lloyd_kmeans, RiskParams};
use compsketch::data::read_csv;
use compsketch::solvers::{ls_regression, LowRankPsd};
use compsketch::{DataMatrix, FeatureMapSpec};
use serde::Serialize;

use super::{provenance, Task};
use crate::config::Resolver;
use crate::error::{usage, CliError, CliResult};
use crate::files::{load_model, open_input, write_json, Provenance};

/// Evaluate a model's empirical risk on a dataset.
#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    /// Model JSON written by `learn`
    #[arg(long)]
    pub model: Option<String>,
    /// CSV dataset
    #[arg(long)]
    pub data: Option<String>,
    /// Expected task; must match the model
    #[arg(long)]
    pub task: Option<Task>,
    /// Also fit the classical baseline (Lloyd, EM, exact PCA, direct least squares)
    #[arg(long)]
    pub baseline: bool,
    /// Baseline runs; the best is kept
    #[arg(long)]
    pub baseline_runs: Option<usize>,
    /// Baseline seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metrics JSON [default: stdout]
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Serialize)]
struct Baseline {
    method: &'static str,
    risk: f64,
    /// Model risk over baseline risk (k-means SSE ratio, captured-energy
    /// fraction for PCA, residual ratio for regression).
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct Metrics {
    task: String,
    n: usize,
    d: usize,
    risk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Baseline>,
    provenance: Provenance,
}

fn best_of(runs: usize, seed: u64, mut f: impl FnMut(u64) -> CliResult<f64>) -> CliResult<f64> {
    let mut best = f64::INFINITY;
    for s in 0..runs as u64 {
        best = best.min(f(seed.wrapping_add(s))?);
    }
    Ok(best)
}

fn baseline(task: Task, data: &DataMatrix, k: usize, runs: usize, seed: u64, risk: f64) -> CliResult<Baseline> {
    Ok(match task {
        Task::KMeans => {
            let best = best_of(runs, seed, |s| {
                let m = lloyd_kmeans(data, k, s)?;
                Ok(kmeans_sse(data, &m.centroids) / data.n() as f64)
            })?;
            Baseline { method: "lloyd", risk: best, ratio: Some(risk / best) }
        }
        Task::Gmm => {
            let best = best_of(runs, seed, |s| Ok(empirical_risk(RiskParams::Gmm(&em_gmm(data, k, s)?), data)?))?;
            Baseline { method: "em", risk: best, ratio: None }
        }
        Task::Pca => {
            let basis = exact_pca(data, k)?;
            let best = empirical_risk(RiskParams::Pca(&basis), data)?;
            Baseline { method: "exact_pca", risk: best, ratio: Some(risk / best) }
        }
        Task::Regress => {
            let spec = FeatureMapSpec::new_outer_product(data.d())?;
            let exact = compsketch::sketch::sketch_dataset(data.rows(), &spec)?;
            let theta = ls_regression(&exact, k, data.d() - k)?;
            let best = empirical_risk(RiskParams::Regression(&theta), data)?;
            Baseline { method: "least_squares", risk: best, ratio: Some(risk / best) }
        }
    })
}

pub fn run(a: EvalArgs, r: &mut Resolver) -> CliResult<()> {
    let model_path = r.required::<String>("model", a.model)?;
    let data_path = r.required::<String>("data", a.data)?;
    let expected = r.optional("task", a.task)?;
    let with_baseline = r.switch("baseline", a.baseline)?;
    let out = r.optional::<String>("out", a.out)?;
    let doc = load_model(Path::new(&model_path))?;
    let task: Task = doc.task.parse().map_err(|e: String| CliError::Parse { path: model_path.clone(), message: e })?;
    if let Some(t) = expected.filter(|t| *t != task) {
        return Err(CliError::Incompatible(format!("{model_path} is a {task} model, not {t}")));
    }
    let data = read_csv(open_input(Path::new(&data_path))?)?;
    if data.is_empty() {
        return Err(usage(format!("{data_path} has no data rows")));
    }
    let (risk, sse, k) = match task {
        Task::KMeans => {
            let m = doc.centroid_model()?;
            let risk = empirical_risk(RiskParams::KMeans(&m), &data)?;
            (risk, Some(kmeans_sse(&data, &m.centroids)), m.k())
        }
        Task::Gmm => {
            let m = doc.gmm_model()?;
            (empirical_risk(RiskParams::Gmm(&m), &data)?, None, m.k())
        }
        Task::Pca => {
            let f = LowRankPsd { factor: doc.factor_matrix()? };
            (empirical_risk(RiskParams::Pca(&f.subspace()), &data)?, None, f.k())
        }
        Task::Regress => {
            let theta = doc.factor_matrix()?;
            (empirical_risk(RiskParams::Regression(&theta), &data)?, None, theta.nrows())
        }
    };
    let baseline = if with_baseline {
        let runs = r.or_default("baseline-runs", a.baseline_runs, 5)?;
        let seed = r.seed("seed", a.seed)?;
        if runs == 0 {
            return Err(usage("--baseline-runs must be at least 1"));
        }
        Some(baseline(task, &data, k, runs, seed, risk)?)
    } else {
        None
    };
    let upstream = doc
        .config
        .as_ref()
        .and_then(|c| serde_json::from_value::<Provenance>(c.clone()).ok())
        .map(|p| vec![p])
        .unwrap_or_default();
    let metrics = Metrics {
        task: task.to_string(),
        n: data.n(),
        d: data.d(),
        risk,
        sse,
        baseline,
        provenance: provenance("eval", r, upstream),
    };
    write_json(out.as_deref().map(Path::new), &metrics)
}
