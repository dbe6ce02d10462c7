use std::path::Path;

use clap::Args;
use compsketch::solvers::SearchBox;
use compsketch::Sketch;

use super::{provenance, refuse_unsealed};
use crate::config::Resolver;
use crate::error::{usage, CliResult};
use crate::files::{load_meta, load_sketch, save_sketch, SketchMeta};

/// Merge sketches of disjoint datasets built with the same map.
#[derive(Args, Debug, Default)]
pub struct MergeArgs {
    /// Input sketches
    pub inputs: Vec<String>,
    #[arg(long)]
    pub out: Option<String>,
}

fn union(a: &SearchBox, b: &SearchBox) -> Option<SearchBox> {
    if a.d() != b.d() {
        return None;
    }
    let lower = a.lower.iter().zip(&b.lower).map(|(x, y)| x.min(*y)).collect();
    let upper = a.upper.iter().zip(&b.upper).map(|(x, y)| x.max(*y)).collect();
    SearchBox::new(lower, upper).ok()
}

pub fn run(a: MergeArgs, r: &mut Resolver, require_dp: bool) -> CliResult<()> {
    let inputs: Vec<String> = if a.inputs.is_empty() {
        let listed = r.required::<String>("inputs", None)?;
        listed.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    } else {
        r.record("inputs", a.inputs.join(","));
        a.inputs
    };
    if inputs.is_empty() {
        return Err(usage("merge needs at least one input sketch"));
    }
    let out = r.required::<String>("out", a.out)?;
    let mut merged: Option<Sketch> = None;
    let mut boxes: Vec<Option<SearchBox>> = Vec::new();
    let mut upstream = Vec::new();
    for path in &inputs {
        let s = load_sketch(Path::new(path))?;
        let meta = load_meta(Path::new(path), &s)?;
        if s.n() > 0 {
            boxes.push(meta.as_ref().and_then(|m| m.bounds.clone()));
        }
        if let Some(m) = meta {
            upstream.push(m.provenance);
        }
        merged = Some(match merged {
            None => {
                if s.is_sealed() && inputs.len() > 1 {
                    return Err(compsketch::Error::SealedSketch.into());
                }
                s
            }
            Some(acc) => acc.merge(&s)?,
        });
    }
    let merged = merged.expect("at least one input");
    if !merged.is_sealed() {
        refuse_unsealed(require_dp, "a merged sketch")?;
    }
    // The merged box is known only if every nonempty input recorded one.
    let bounds = boxes
        .into_iter()
        .reduce(|a, b| a.zip(b).and_then(|(a, b)| union(&a, &b)))
        .flatten();
    let meta = SketchMeta::new(provenance("merge", r, upstream), &merged, bounds);
    save_sketch(Path::new(&out), &merged, &meta)
}
