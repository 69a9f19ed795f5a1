//! Versioned JSON files for pipeline artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::LatticePoint;
use crate::pipeline::{PipelineArtifact, ProvenanceStep};
use crate::regularity::{CheckMode, RegularityWitness};
use crate::subdivision::{verify, PointStore, Subdivision, Triangulation};
use crate::sylvester::{build, Family, FamilySpec};

pub const FORMAT_VERSION: u64 = 1;

/// `<dir>/<family>_<n>.json`.
pub fn cache_path(dir: impl AsRef<Path>, spec: FamilySpec) -> PathBuf {
    dir.as_ref().join(format!("{spec}.json"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Writes `a` to `path`, streaming points and cells row by row.
pub fn save(a: &PipelineArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("json.partial");
    let file = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    let mut out = BufWriter::new(file);
    write_json(a, &mut out).map_err(|e| io_err(&tmp, e))?;
    out.flush().map_err(|e| io_err(&tmp, e))?;
    drop(out);
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Serializes `a` into `out` in the artifact format.
pub fn write_json<W: Write>(a: &PipelineArtifact, out: &mut W) -> std::io::Result<()> {
    let t = &a.triangulation;
    writeln!(out, "{{")?;
    writeln!(out, "  \"version\": {FORMAT_VERSION},")?;
    writeln!(out, "  \"family\": \"{}\",", a.spec.family)?;
    writeln!(out, "  \"n\": {},", a.spec.n)?;
    writeln!(out, "  \"points\": [")?;
    let pts = t.store().points();
    for (i, p) in pts.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|c| format!("\"{c}\"")).collect();
        let sep = if i + 1 < pts.len() { "," } else { "" };
        writeln!(out, "    [{}]{sep}", coords.join(","))?;
    }
    writeln!(out, "  ],")?;
    writeln!(out, "  \"cells\": [")?;
    let n = t.num_cells();
    for (i, c) in t.cells().enumerate() {
        let idx: Vec<String> = c.iter().map(u32::to_string).collect();
        let sep = if i + 1 < n { "," } else { "" };
        writeln!(out, "    [{}]{sep}", idx.join(","))?;
    }
    writeln!(out, "  ],")?;
    write!(out, "  \"witness\": ")?;
    serde_json::to_writer(&mut *out, &a.witness)?;
    writeln!(out, ",")?;
    write!(out, "  \"regularity_mode\": ")?;
    serde_json::to_writer(&mut *out, &a.regularity_mode)?;
    writeln!(out, ",")?;
    write!(out, "  \"provenance\": ")?;
    serde_json::to_writer(&mut *out, &a.provenance)?;
    writeln!(out)?;
    writeln!(out, "}}")
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArtifact {
    #[allow(dead_code)]
    version: u64,
    family: Family,
    n: usize,
    points: Vec<Vec<String>>,
    cells: Vec<Vec<u32>>,
    witness: Vec<String>,
    #[serde(default)]
    regularity_mode: Option<CheckMode>,
    provenance: Vec<ProvenanceStep>,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.into(),
    }
}

fn json_err(path: &Path, e: serde_json::Error) -> Error {
    parse_err(
        format!("{}:{}:{}", path.display(), e.line(), e.column()),
        e.to_string(),
    )
}

/// Reads and validates an artifact, including a full subdivision check.
pub fn load(path: impl AsRef<Path>) -> Result<PipelineArtifact> {
    let a = load_unchecked(path.as_ref())?;
    let report = verify(&a.triangulation)?;
    if !(report.valid && report.unimodular) {
        return Err(Error::Verification(format!(
            "{}: stored cells do not form a unimodular triangulation ({})",
            path.as_ref().display(),
            report.reasons.join("; ")
        )));
    }
    Ok(a)
}

/// Reads an artifact, checking its structure but not the geometry of its
/// cells.
pub fn load_unchecked(path: impl AsRef<Path>) -> Result<PipelineArtifact> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse(&text, path)
}

/// Parses artifact JSON; `origin` is only used in error locations.
pub fn parse(text: &str, origin: &Path) -> Result<PipelineArtifact> {
    let probe: VersionProbe = serde_json::from_str(text).map_err(|e| json_err(origin, e))?;
    if probe.version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: probe.version,
            expected: FORMAT_VERSION,
        });
    }
    let raw: RawArtifact = serde_json::from_str(text).map_err(|e| json_err(origin, e))?;
    let spec = FamilySpec::new(raw.family, raw.n)?;
    let dim = raw.n;
    let points = raw
        .points
        .iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dim {
                return Err(parse_err(format!("points[{i}]"), format!("expected {dim} coordinates")));
            }
            row.iter()
                .map(|c| {
                    c.parse::<i64>()
                        .map_err(|_| parse_err(format!("points[{i}]"), format!("bad coordinate {c:?}")))
                })
                .collect::<Result<Vec<_>>>()
                .map(LatticePoint::new)
        })
        .collect::<Result<Vec<_>>>()?;
    let store = PointStore::from_sorted(points).map_err(|e| parse_err("points", e.to_string()))?;
    for (i, c) in raw.cells.iter().enumerate() {
        if let Some(&bad) = c.iter().find(|&&x| x as usize >= store.len()) {
            return Err(parse_err(format!("cells[{i}]"), format!("index {bad} outside the point store")));
        }
    }
    let ambient = build(spec)?.vertices().to_vec();
    if let Some(v) = ambient.iter().find(|v| !store.contains(v)) {
        return Err(parse_err("points", format!("vertex {v} of {spec} is missing")));
    }
    let s = Subdivision::new(store, &ambient, raw.cells).map_err(|e| parse_err("cells", e.to_string()))?;
    let triangulation = Triangulation::new(s).map_err(|e| parse_err("cells", e.to_string()))?;
    let witness = RegularityWitness::from_strings(&raw.witness)?;
    if witness.len() != triangulation.store().len() {
        return Err(parse_err(
            "witness",
            format!("{} values for {} points", witness.len(), triangulation.store().len()),
        ));
    }
    Ok(PipelineArtifact {
        spec,
        triangulation,
        witness,
        provenance: raw.provenance,
        regularity_mode: raw.regularity_mode,
    })
}
