use std::io;
use std::path::{Path, PathBuf};

use clap::Args;
use compsketch::baselines::{synth_gmm, SyntheticSpec};
use compsketch::data::write_csv;
use serde::Serialize;

use super::provenance;
use crate::config::{NumberList, Resolver};
use crate::error::CliResult;
use crate::files::{with_output, write_json, Provenance};

/// Draw a synthetic isotropic Gaussian mixture as CSV.
#[derive(Args, Debug, Default)]
pub struct GenArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Minimum center spacing in units of sigma [default: 6]
    #[arg(long)]
    pub sep: Option<f64>,
    /// Per-coordinate standard deviation [default: 1]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated mixture weights [default: uniform]
    #[arg(long)]
    pub weights: Option<NumberList>,
    /// Half-width of the box holding the centers
    #[arg(long)]
    pub box_half_width: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output [default: stdout]
    #[arg(long)]
    pub out: Option<String>,
    /// Ground-truth JSON [default: <out>.truth.json when --out is a file]
    #[arg(long)]
    pub truth: Option<String>,
}

#[derive(Serialize)]
struct Truth {
    provenance: Provenance,
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

pub fn run(a: GenArgs, r: &mut Resolver) -> CliResult<()> {
    let spec = SyntheticSpec {
        k: r.required("k", a.k)?,
        d: r.required("d", a.d)?,
        n: r.required("n", a.n)?,
        separation: r.or_default("sep", a.sep, 6.0)?,
        sigma: r.or_default("sigma", a.sigma, 1.0)?,
        weights: r.optional("weights", a.weights)?.map(|w| w.0),
        seed: r.seed("seed", a.seed)?,
        box_half_width: r.optional("box-half-width", a.box_half_width)?,
    };
    let out = r.optional::<String>("out", a.out)?;
    let truth_path = match r.optional::<String>("truth", a.truth)? {
        Some(t) => Some(PathBuf::from(t)),
        None => out.as_deref().filter(|o| *o != "-").map(|o| PathBuf::from(format!("{o}.truth.json"))),
    };
    let syn = synth_gmm(&spec)?;
    with_output(out.as_deref().map(Path::new), |w| {
        write_csv(&syn.data, w).map_err(|e| io::Error::other(e.to_string()))
    })?;
    if let Some(path) = truth_path {
        let mut counts = vec![0; spec.k];
        syn.labels.iter().for_each(|&l| counts[l] += 1);
        let truth = Truth {
            provenance: provenance("gen", r, Vec::new()),
            weights: syn.truth.weights,
            means: syn.truth.means,
            variances: syn.truth.variances,
            counts,
        };
        write_json(Some(&path), &truth)?;
    }
    Ok(())
}
