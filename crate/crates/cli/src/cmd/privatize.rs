use std::path::Path;

use clap::Args;
use compsketch::privacy::{privatize_gaussian_with, privatize_laplace_with, sensitivity};
use compsketch::{FeatureMapSpec, Sketch};

use super::provenance;
use crate::config::Resolver;
use crate::error::{usage, CliResult};
use crate::files::{load_meta, load_sketch, save_sketch, SketchMeta};

/// Release a sketch under differential privacy; the result is sealed.
#[derive(Args, Debug, Default)]
pub struct PrivatizeArgs {
    /// Input sketch
    #[arg(long)]
    pub sketch: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Use the Gaussian mechanism with this delta instead of Laplace
    #[arg(long)]
    pub delta: Option<f64>,
    /// Bound on ‖x‖, required for quadratic and outer-product sketches
    #[arg(long)]
    pub radius: Option<f64>,
    /// Noise seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
}

/// Privacy settings shared with `sketch`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PrivacySettings {
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub radius: Option<f64>,
    pub seed: u64,
}

pub(crate) fn apply(s: &Sketch, spec: &FeatureMapSpec, p: PrivacySettings) -> CliResult<Sketch> {
    if s.n() == 0 {
        return Err(usage("cannot privatize an empty sketch"));
    }
    let bounds = sensitivity(spec, s.n(), p.radius)?;
    Ok(match p.delta {
        None => privatize_laplace_with(s, bounds, p.epsilon, p.seed)?,
        Some(delta) => privatize_gaussian_with(s, bounds, p.epsilon, delta, p.seed)?,
    })
}

pub fn run(a: PrivatizeArgs, r: &mut Resolver) -> CliResult<()> {
    let input = r.required::<String>("sketch", a.sketch)?;
    let settings = PrivacySettings {
        epsilon: r.required("epsilon", a.epsilon)?,
        delta: r.optional("delta", a.delta)?,
        radius: r.optional("radius", a.radius)?,
        seed: r.seed("seed", a.seed)?,
    };
    let out = r.required::<String>("out", a.out)?;
    let sketch = load_sketch(Path::new(&input))?;
    let meta = load_meta(Path::new(&input), &sketch)?;
    let spec = FeatureMapSpec::from_params(*sketch.params())?;
    let sealed = apply(&sketch, &spec, settings)?;
    if meta.as_ref().is_some_and(|m| m.bounds.is_some()) {
        eprintln!("note: the data bounding box is not private and is dropped from the released sidecar");
    }
    let upstream = meta.map(|m| vec![m.provenance]).unwrap_or_default();
    // The box of raw data is not differentially private, so it is not released.
    let out_meta = SketchMeta::new(provenance("privatize", r, upstream), &sealed, None);
    save_sketch(Path::new(&out), &sealed, &out_meta)
}
