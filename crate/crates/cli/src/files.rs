//! Sketch, sidecar and JSON document I/O.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use compsketch::sketch::{deserialize, deserialize_json, serialize, serialize_json};
use compsketch::solvers::{ModelDocument, SearchBox};
use compsketch::{MapParams, PrivacyRecord, Sketch};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, CliResult};

/// Resolved settings of one command plus those of the commands that
/// produced its inputs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub settings: std::collections::BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub upstream: Vec<Provenance>,
}

/// Sidecar written next to every sketch as `<sketch>.meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchMeta {
    pub provenance: Provenance,
    pub map: MapParams,
    pub n: u64,
    pub fingerprint: String,
    /// Per-coordinate bounding box of the sketched data.
    pub bounds: Option<SearchBox>,
    #[serde(default)]
    pub privacy: Option<PrivacyRecord>,
    /// Median pairwise distance of the subsample used by `--sigma-w auto`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub median_distance: Option<f64>,
}

impl SketchMeta {
    pub fn new(provenance: Provenance, sketch: &Sketch, bounds: Option<SearchBox>) -> Self {
        Self {
            provenance,
            map: *sketch.params(),
            n: sketch.n(),
            fingerprint: sketch.fingerprint().to_hex(),
            bounds,
            privacy: sketch.privacy().copied(),
            median_distance: None,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads a binary sketch, or its JSON mirror when the path ends in `.json`.
pub fn load_sketch(path: &Path) -> CliResult<Sketch> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let sketch = if is_json(path) {
        let text = String::from_utf8(bytes).map_err(|_| CliError::Parse {
            path: path.display().to_string(),
            message: "sketch JSON is not UTF-8".into(),
        })?;
        deserialize_json(&text)?
    } else {
        deserialize(&bytes)?
    };
    Ok(sketch)
}

/// Sidecar for `path` if one exists and describes the same sketch map.
pub fn load_meta(path: &Path, sketch: &Sketch) -> CliResult<Option<SketchMeta>> {
    let meta_path = sidecar_path(path);
    let text = match std::fs::read_to_string(&meta_path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(io_err(&meta_path)(e)),
    };
    let meta: SketchMeta = parse_json(&meta_path, &text)?;
    if meta.fingerprint != sketch.fingerprint().to_hex() {
        return Err(CliError::Parse {
            path: meta_path.display().to_string(),
            message: "sidecar describes a different feature map".into(),
        });
    }
    Ok(Some(meta))
}

pub fn save_sketch(path: &Path, sketch: &Sketch, meta: &SketchMeta) -> CliResult<()> {
    let bytes = if is_json(path) {
        serialize_json(sketch).into_bytes()
    } else {
        serialize(sketch)
    };
    std::fs::write(path, bytes).map_err(io_err(path))?;
    write_json(Some(&sidecar_path(path)), meta)
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Pretty JSON to a file, or stdout when `path` is `None` or `-`.
pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("documents serialize to JSON");
    with_output(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

fn is_stdio(path: Option<&Path>) -> bool {
    path.is_none_or(|p| p.as_os_str() == "-")
}

pub fn with_output(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CliResult<()> {
    if is_stdio(path) {
        let stdout = io::stdout();
        let mut w = BufWriter::new(stdout.lock());
        return f(&mut w).and_then(|_| w.flush()).map_err(io_err("<stdout>"));
    }
    let path = path.expect("checked above");
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Buffered reader over a file, or stdin for `-`.
pub fn open_input(path: &Path) -> CliResult<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::with_capacity(1 << 16, io::stdin())));
    }
    let file = File::open(path).map_err(io_err(path))?;
    Ok(Box::new(BufReader::with_capacity(1 << 16, file)))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    let mut text = String::new();
    open_input(path)?.read_to_string(&mut text).map_err(io_err(path))?;
    Ok(text)
}

/// Parses a model document and checks that it describes a usable model.
pub fn parse_model(text: &str) -> compsketch::Result<ModelDocument> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| compsketch::Error::Format(format!("model json: {e}")))?;
    let bad = |e: compsketch::Error| compsketch::Error::Format(format!("model document: {e}"));
    match doc.task.as_str() {
        "kmeans" => {
            doc.centroid_model().map_err(bad)?;
        }
        "gmm" => {
            doc.gmm_model().map_err(bad)?;
        }
        "pca" | "regress" => {
            let f = doc.factor_matrix().map_err(bad)?;
            if f.iter().any(|v| !v.is_finite()) {
                return Err(bad(compsketch::Error::InvalidArgument("non-finite factor".into())));
            }
        }
        other => return Err(compsketch::Error::Format(format!("unknown model task '{other}'"))),
    }
    Ok(doc)
}

pub fn load_model(path: &Path) -> CliResult<ModelDocument> {
    let text = read_text(path)?;
    parse_model(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
