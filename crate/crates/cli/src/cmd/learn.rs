use std::path::Path;

use clap::Args;
use compsketch::solvers::{
    clomp_gmm, clomp_kmeans, fit_lowrank_psd, lowrank_objective, ls_regression_with, sketch_cost, ModelDocument,
    RegressionOptions, SearchBox, SolverOptions,
};
use compsketch::{FeatureMapSpec, Sketch};
use nalgebra::DMatrix;

use super::{provenance, Task};
use crate::config::{NumberList, Resolver};
use crate::error::{usage, CliResult};
use crate::files::{load_meta, load_sketch, write_json, SketchMeta};

/// Recover task parameters from a sketch.
#[derive(Args, Debug, Default)]
pub struct LearnArgs {
    /// Input sketch
    #[arg(long)]
    pub sketch: Option<String>,
    /// kmeans | gmm | pca | regress
    #[arg(long)]
    pub task: Option<Task>,
    /// Number of components or subspace rank
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Solver seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Search box, comma-separated [default: the box recorded in the sidecar]
    #[arg(long, allow_hyphen_values = true)]
    pub box_lower: Option<NumberList>,
    #[arg(long, allow_hyphen_values = true)]
    pub box_upper: Option<NumberList>,
    /// Regression: number of leading target coordinates [default: 1]
    #[arg(long)]
    pub targets: Option<usize>,
    /// Regression: ridge term
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Model JSON [default: stdout]
    #[arg(long)]
    pub out: Option<String>,
}

fn search_box(
    r: &mut Resolver,
    a: &LearnArgs,
    meta: Option<&SketchMeta>,
    d: usize,
) -> CliResult<SearchBox> {
    let lower = r.optional("box-lower", a.box_lower.clone())?;
    let upper = r.optional("box-upper", a.box_upper.clone())?;
    let b = match (lower, upper) {
        (Some(lo), Some(hi)) => SearchBox::new(lo.0, hi.0)?,
        (None, None) => meta.and_then(|m| m.bounds.clone()).ok_or_else(|| {
            usage("no search box: pass --box-lower and --box-upper (the sidecar records none)")
        })?,
        _ => return Err(usage("--box-lower and --box-upper go together")),
    };
    if b.d() != d {
        return Err(usage(format!("search box has dimension {}, sketch has {d}", b.d())));
    }
    Ok(b)
}

/// `E‖y − Θx‖²` evaluated on the second-moment sketch.
fn regression_residual(sketch: &Sketch, theta: &DMatrix<f64>) -> f64 {
    let d = sketch.params().d as usize;
    let (d1, d2) = (theta.nrows(), theta.ncols());
    let r = DMatrix::from_column_slice(d, d, &sketch.real_values());
    let r11 = r.view((0, 0), (d1, d1));
    let r12 = r.view((0, d1), (d1, d2));
    let r22 = r.view((d1, d1), (d2, d2));
    r11.trace() - 2.0 * (theta * r12.transpose()).trace() + (theta * r22 * theta.transpose()).trace()
}

pub fn run(a: LearnArgs, r: &mut Resolver) -> CliResult<()> {
    let input = r.required::<String>("sketch", a.sketch.clone())?;
    let task = r.required("task", a.task)?;
    let out = r.optional::<String>("out", a.out.clone())?;
    let sketch = load_sketch(Path::new(&input))?;
    let meta = load_meta(Path::new(&input), &sketch)?;
    if sketch.n() == 0 {
        return Err(compsketch::Error::EmptySketch.into());
    }
    let spec = FeatureMapSpec::from_params(*sketch.params())?;
    let fingerprint = sketch.fingerprint().to_hex();
    let d = spec.d();
    let defaults = SolverOptions::default();

    let mut doc = match task {
        Task::Regress => {
            let targets = r.or_default("targets", a.targets, 1)?;
            if targets >= d {
                return Err(usage(format!("--targets must be below the sketch dimension {d}")));
            }
            let opts = RegressionOptions {
                ridge: r.optional("ridge", a.ridge)?,
                ..RegressionOptions::default()
            };
            let theta = ls_regression_with(&sketch, targets, d - targets, &opts)?;
            ModelDocument::from_regression(&theta, regression_residual(&sketch, &theta), fingerprint)
        }
        _ => {
            let k = r.required::<usize>("k", a.k)?;
            let mut opts = SolverOptions {
                restarts: r.or_default("restarts", a.restarts, defaults.restarts)?,
                tolerance: r.or_default("tolerance", a.tolerance, defaults.tolerance)?,
                max_iterations: r.or_default("max-iterations", a.max_iterations, defaults.max_iterations)?,
                seed: r.seed("seed", a.seed)?,
                ..defaults
            };
            opts.validate()?;
            match task {
                Task::KMeans | Task::Gmm => {
                    opts.search_box = Some(search_box(r, &a, meta.as_ref(), d)?);
                    if task == Task::KMeans {
                        let model = clomp_kmeans(&sketch, k, &spec, &opts)?;
                        let cost = sketch_cost(&model, &sketch, &spec)?;
                        ModelDocument::from_centroids(&model, cost, opts.seed, fingerprint)
                    } else {
                        let model = clomp_gmm(&sketch, k, &spec, &opts)?;
                        let cost = sketch_cost(&model, &sketch, &spec)?;
                        ModelDocument::from_gmm(&model, cost, opts.seed, fingerprint)
                    }
                }
                _ => {
                    let model = fit_lowrank_psd(&sketch, k, &spec, &opts)?;
                    let (cost, _) = lowrank_objective(&sketch, &spec, &model.factor)?;
                    ModelDocument::from_lowrank(&model, cost, opts.seed, fingerprint)
                }
            }
        }
    };
    if !doc.objective.is_finite() {
        return Err(compsketch::Error::Numerical(format!("objective is {}", doc.objective)).into());
    }
    let upstream = meta.map(|m| vec![m.provenance]).unwrap_or_default();
    doc.config = Some(serde_json::to_value(provenance("learn", r, upstream)).expect("provenance serializes"));
    write_json(out.as_deref().map(Path::new), &doc)
}
