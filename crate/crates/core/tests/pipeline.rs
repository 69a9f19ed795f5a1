mod common;

use std::path::Path;

use crepant_core::artifact::{self, FORMAT_VERSION};
use crepant_core::pipeline::{self, Pipeline, PipelineArtifact, PipelineOptions, StepKind};
use crepant_core::regularity::CheckMode;
use crepant_core::sylvester::{p2dual_apex, Family, FamilySpec};
use crepant_core::Error;

fn p2dual(n: usize) -> PipelineArtifact {
    pipeline::triangulate_p2dual(n).unwrap()
}

fn saved_text(a: &PipelineArtifact) -> String {
    let mut buf = Vec::new();
    artifact::write_json(a, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

fn json(a: &PipelineArtifact) -> serde_json::Value {
    serde_json::from_str(&saved_text(a)).unwrap()
}

fn parse(v: &serde_json::Value) -> crepant_core::Result<PipelineArtifact> {
    artifact::parse(&v.to_string(), Path::new("test.json"))
}

#[test]
fn cell_counts_match_normalized_volume() {
    for n in 1..=3 {
        for family in [Family::P2dual, Family::P2] {
            let spec = FamilySpec::new(family, n).unwrap();
            let a = Pipeline::new(PipelineOptions::default()).triangulate(spec).unwrap();
            assert_eq!(a.triangulation.num_cells().to_string(), spec.nvol().to_string());
            assert_eq!(a.regularity_mode, Some(CheckMode::Full));
        }
    }
    let a = pipeline::triangulate_p1(4).unwrap();
    assert_eq!(a.triangulation.num_cells(), 84);
}

#[test]
fn apex_cells_are_counted() {
    let s = common::sylvester(4);
    for n in 1..=3 {
        let a = p2dual(n + 1);
        let z = p2dual_apex(n + 1).unwrap();
        let k = pipeline::cells_containing(&a.triangulation, &z) as i64;
        assert_eq!(k, s[n] - 1, "apex of level {}", n + 1);
    }
}

#[test]
fn provenance_records_each_construction() {
    let a = pipeline::triangulate_p1(3).unwrap();
    let kinds: Vec<StepKind> = a.provenance.iter().map(|s| s.kind).collect();
    for k in [
        StepKind::BaseSegment,
        StepKind::ColumnPullback,
        StepKind::ApexGlue,
        StepKind::PullAll,
        StepKind::DualityTransport,
        StepKind::Embed,
        StepKind::VertexCone,
    ] {
        assert!(kinds.contains(&k), "missing {k:?} in {kinds:?}");
    }
    assert!(a.provenance.iter().all(|s| !s.justification.is_empty()));
}

#[test]
fn replay_reproduces_artifacts() {
    for a in [p2dual(3), pipeline::triangulate_p2(3).unwrap(), pipeline::triangulate_p1(3).unwrap()] {
        let b = pipeline::replay(&a).unwrap();
        assert_eq!(a.triangulation, b.triangulation, "{}", a.spec);
        assert_eq!(a.witness, b.witness, "{}", a.spec);
    }
}

#[test]
fn infeasible_requests_are_refused_before_work() {
    let p = Pipeline::new(PipelineOptions::default());
    let err = p.precheck(FamilySpec::new(Family::P2dual, 99).unwrap()).unwrap_err();
    assert!(matches!(err, Error::Feasibility { .. }), "{err}");
    let small = Pipeline::new(PipelineOptions {
        max_cells: 10,
        ..PipelineOptions::default()
    });
    let err = small.triangulate_p2dual(3).unwrap_err();
    assert!(matches!(err, Error::Feasibility { .. }), "{err}");
    assert!(small.triangulate_p2dual(2).is_ok());
}

#[test]
fn artifact_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for a in [p2dual(3), pipeline::triangulate_p1(3).unwrap()] {
        let path = dir.path().join(format!("{}.json", a.spec));
        artifact::save(&a, &path).unwrap();
        assert_eq!(artifact::load(&path).unwrap(), a);
        assert!(!path.with_extension("json.partial").exists());
    }
}

#[test]
fn cache_is_written_and_reused() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(PipelineOptions {
        cache_dir: Some(dir.path().to_path_buf()),
        ..PipelineOptions::default()
    });
    let a = p.triangulate_p2(3).unwrap();
    for spec in ["p2dual_1", "p2dual_2", "p2dual_3", "p2_3"] {
        assert!(dir.path().join(format!("{spec}.json")).exists(), "{spec} not cached");
    }
    assert_eq!(p.triangulate_p2(3).unwrap(), a);
}

#[test]
fn version_mismatch_is_reported() {
    let mut v = json(&p2dual(2));
    v["version"] = (FORMAT_VERSION + 1).into();
    assert_eq!(
        parse(&v).unwrap_err(),
        Error::UnsupportedVersion {
            found: FORMAT_VERSION + 1,
            expected: FORMAT_VERSION
        }
    );
}

#[test]
fn malformed_artifacts_are_parse_errors() {
    let a = p2dual(2);
    let text = saved_text(&a);
    let truncated = &text[..text.len() / 2];
    assert!(matches!(
        artifact::parse(truncated, Path::new("t.json")),
        Err(Error::Parse { .. })
    ));

    let base = json(&a);
    let mut extra = base.clone();
    extra["colour"] = "blue".into();
    assert!(matches!(parse(&extra), Err(Error::Parse { .. })));

    let mut short = base.clone();
    short["witness"].as_array_mut().unwrap().pop();
    assert!(matches!(parse(&short), Err(Error::Parse { .. })));

    let mut bad_index = base.clone();
    bad_index["cells"][0][0] = 9999.into();
    assert!(matches!(parse(&bad_index), Err(Error::Parse { .. })));

    let mut bad_coord = base;
    bad_coord["points"][0][0] = "x".into();
    assert!(matches!(parse(&bad_coord), Err(Error::Parse { .. })));
}

#[test]
fn tampered_cells_fail_verification_on_load() {
    let a = p2dual(3);
    let mut v = json(&a);
    let cells = v["cells"].as_array_mut().unwrap();
    let first = cells[0].clone();
    cells[1] = first;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tampered.json");
    std::fs::write(&path, v.to_string()).unwrap();
    match artifact::load(&path) {
        Err(Error::Verification(_)) | Err(Error::Parse { .. }) => {}
        other => panic!("tampered artifact accepted: {other:?}"),
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = artifact::load("/nonexistent/a.json").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}
