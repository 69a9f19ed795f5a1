//! Recursive construction of regular unimodular triangulations of the three
//! families, with a regularity witness carried through every step.

use std::path::PathBuf;
use std::time::Instant;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::artifact;
use crate::error::{Error, Result};
use crate::exact::{format_rat, parse_rat, BigInt, BigRat};
use crate::geometry::{IntHalfSpace, LatticePoint};
use crate::regularity::{
    self, verify_regularity_with, CheckMode, RegularityOptions, RegularityWitness,
};
use crate::subdivision::{
    apply_lattice_map, cone_subdivision, glue, pullback_restricted, restrict_to_hyperplane, verify,
    LatticeMap, PointStore, Subdivision, Triangulation,
};
use crate::sylvester::{self, Family, FamilySpec, Limits};

/// Kind of a construction step recorded in an artifact's provenance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    BaseSegment,
    ColumnPullback,
    SlantedRestriction,
    ApexCone,
    ApexGlue,
    PullAll,
    DualityTransport,
    Embed,
    VertexCone,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceStep {
    pub kind: StepKind,
    /// Dimension of the polytope produced by the step.
    pub level: usize,
    pub justification: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<String>,
    /// Decrement of the witness per pulled store point, in store order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
}

impl ProvenanceStep {
    fn new(kind: StepKind, level: usize, justification: &str) -> Self {
        ProvenanceStep {
            kind,
            level,
            justification: justification.into(),
            apex: None,
            omega: None,
            epsilons: Vec::new(),
            cells: None,
        }
    }

    fn with_apex(mut self, z: &LatticePoint) -> Self {
        self.apex = Some(z.iter().map(i64::to_string).collect());
        self
    }

    fn recorded_omega(&self) -> Result<BigRat> {
        let raw = self
            .omega
            .as_deref()
            .ok_or_else(|| Error::Parse { location: "provenance".into(), message: "missing omega".into() })?;
        parse_rat(raw).ok_or_else(|| Error::Parse {
            location: "provenance.omega".into(),
            message: format!("not a rational number: {raw:?}"),
        })
    }

    fn recorded_epsilons(&self) -> Result<Vec<BigRat>> {
        self.epsilons
            .iter()
            .enumerate()
            .map(|(i, e)| {
                parse_rat(e).ok_or_else(|| Error::Parse {
                    location: format!("provenance.epsilons[{i}]"),
                    message: format!("not a rational number: {e:?}"),
                })
            })
            .collect()
    }
}

/// A triangulation of a family member together with its regularity witness
/// and the log of steps that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineArtifact {
    pub spec: FamilySpec,
    pub triangulation: Triangulation,
    pub witness: RegularityWitness,
    pub provenance: Vec<ProvenanceStep>,
    /// How the witness was checked when the artifact was produced.
    pub regularity_mode: Option<CheckMode>,
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub limits: Limits,
    /// Refuse triangulations with more cells than this.
    pub max_cells: u64,
    /// Directory holding `<family>_<n>.json` artifacts reused across runs.
    pub cache_dir: Option<PathBuf>,
    /// Check every produced artifact (subdivision and witness).
    pub check: bool,
    /// Smallest level whose witness is checked locally instead of fully.
    pub local_from: usize,
    pub progress: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            limits: Limits::default(),
            max_cells: 5_000_000,
            cache_dir: None,
            check: true,
            local_from: 5,
            progress: false,
        }
    }
}

pub struct Pipeline {
    opts: PipelineOptions,
}

/// Recorded parameters looked up by (kind, level) when replaying.
struct Script<'a>(Option<&'a [ProvenanceStep]>);

impl Script<'_> {
    fn find(&self, kind: StepKind, level: usize) -> Result<Option<&ProvenanceStep>> {
        let Some(steps) = self.0 else { return Ok(None) };
        steps
            .iter()
            .find(|s| s.kind == kind && s.level == level)
            .map(Some)
            .ok_or_else(|| Error::Parse {
                location: "provenance".into(),
                message: format!("no {kind:?} step at level {level}"),
            })
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Self::new(PipelineOptions::default())
    }
}

impl Pipeline {
    pub fn new(opts: PipelineOptions) -> Self {
        Pipeline { opts }
    }

    pub fn options(&self) -> &PipelineOptions {
        &self.opts
    }

    fn note(&self, msg: impl AsRef<str>) {
        if self.opts.progress {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Rejects specs beyond the size limits before doing any work.
    pub fn precheck(&self, spec: FamilySpec) -> Result<()> {
        spec.check(&self.opts.limits)?;
        let cells = spec.nvol();
        if cells > BigInt::from(self.opts.max_cells) {
            return Err(Error::Feasibility {
                what: format!("triangulating {spec}"),
                needed: format!("{cells} cells"),
                limit: format!("{} cells", self.opts.max_cells),
            });
        }
        Ok(())
    }

    pub fn triangulate(&self, spec: FamilySpec) -> Result<PipelineArtifact> {
        match spec.family {
            Family::P2dual => self.triangulate_p2dual(spec.n),
            Family::P2 => self.triangulate_p2(spec.n),
            Family::P1 => self.triangulate_p1(spec.n),
        }
    }

    fn cached(&self, spec: FamilySpec) -> Option<PipelineArtifact> {
        let path = artifact::cache_path(self.opts.cache_dir.as_ref()?, spec);
        match artifact::load(&path) {
            Ok(a) if a.spec == spec => {
                self.note(format!("reusing {}", path.display()));
                Some(a)
            }
            _ => None,
        }
    }

    fn store_cache(&self, a: &PipelineArtifact) -> Result<()> {
        if let Some(dir) = &self.opts.cache_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.display().to_string(),
                message: e.to_string(),
            })?;
            artifact::save(a, artifact::cache_path(dir, a.spec))?;
        }
        Ok(())
    }

    fn with_cache(
        &self,
        spec: FamilySpec,
        build: impl FnOnce() -> Result<PipelineArtifact>,
    ) -> Result<PipelineArtifact> {
        self.precheck(spec)?;
        if let Some(a) = self.cached(spec) {
            return Ok(a);
        }
        let a = build()?;
        self.store_cache(&a)?;
        Ok(a)
    }

    pub fn triangulate_p2dual(&self, n: usize) -> Result<PipelineArtifact> {
        let spec = FamilySpec::new(Family::P2dual, n)?;
        self.with_cache(spec, || {
            if n == 1 {
                return self.finish(p2dual_base()?);
            }
            let prev = self.triangulate_p2dual(n - 1)?;
            self.note(format!("building p2dual_{n} from {} cells", prev.triangulation.num_cells()));
            self.finish(p2dual_step(&prev, &Script(None), &|m| self.note(m))?)
        })
    }

    pub fn triangulate_p2(&self, n: usize) -> Result<PipelineArtifact> {
        let spec = FamilySpec::new(Family::P2, n)?;
        self.with_cache(spec, || {
            let dual = self.triangulate_p2dual(n)?;
            self.finish(p2_from_dual(&dual)?)
        })
    }

    pub fn triangulate_p1(&self, n_plus_1: usize) -> Result<PipelineArtifact> {
        let spec = FamilySpec::new(Family::P1, n_plus_1)?;
        if n_plus_1 < 2 {
            return Err(Error::Argument("P1 is triangulated for n + 1 >= 2".into()));
        }
        self.with_cache(spec, || {
            let p2 = self.triangulate_p2(n_plus_1 - 1)?;
            self.finish(p1_from_p2(&p2, &Script(None))?)
        })
    }

    /// Runs the checks an artifact promises and records the witness mode.
    fn finish(&self, mut a: PipelineArtifact) -> Result<PipelineArtifact> {
        if !self.opts.check {
            return Ok(a);
        }
        let report = verify(&a.triangulation)?;
        if !(report.valid && report.unimodular) {
            return Err(Error::Verification(format!(
                "{} is not a unimodular triangulation ({}); provenance: {}",
                a.spec,
                report.reasons.join("; "),
                provenance_summary(&a.provenance)
            )));
        }
        let mode = if a.spec.n >= self.opts.local_from {
            CheckMode::LocalSampled
        } else {
            CheckMode::Full
        };
        let cert = verify_regularity_with(
            &a.triangulation,
            &a.witness,
            &RegularityOptions { mode, ..RegularityOptions::default() },
        )?;
        if !cert.regular {
            return Err(Error::Verification(format!(
                "witness of {} fails at {} pairs; provenance: {}",
                a.spec,
                cert.violating_pairs.len(),
                provenance_summary(&a.provenance)
            )));
        }
        self.note(format!(
            "{}: {} cells, witness checked ({mode}, {} pairs)",
            a.spec,
            a.triangulation.num_cells(),
            cert.checked_pairs
        ));
        a.regularity_mode = Some(mode);
        Ok(a)
    }
}

fn provenance_summary(steps: &[ProvenanceStep]) -> String {
    steps
        .iter()
        .map(|s| format!("{:?}@{}", s.kind, s.level))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn triangulate_p2dual(n: usize) -> Result<PipelineArtifact> {
    Pipeline::default().triangulate_p2dual(n)
}

pub fn triangulate_p2(n: usize) -> Result<PipelineArtifact> {
    Pipeline::default().triangulate_p2(n)
}

pub fn triangulate_p1(n_plus_1: usize) -> Result<PipelineArtifact> {
    Pipeline::default().triangulate_p1(n_plus_1)
}

fn p2dual_base() -> Result<PipelineArtifact> {
    let pts: Vec<LatticePoint> = (-1..=1).map(|t| LatticePoint::new(vec![t])).collect();
    let store = PointStore::from_sorted(pts.clone())?;
    let t = Subdivision::new(store, &[pts[0].clone(), pts[2].clone()], [vec![0, 1], vec![1, 2]])?;
    Ok(PipelineArtifact {
        spec: FamilySpec::new(Family::P2dual, 1)?,
        triangulation: Triangulation::new(t)?,
        witness: RegularityWitness::from_ints(&[1, 0, 1]),
        provenance: vec![ProvenanceStep {
            cells: Some(2),
            ..ProvenanceStep::new(
                StepKind::BaseSegment,
                1,
                "the segment [-1, 1] split at 0; witness |x| is strictly convex",
            )
        }],
        regularity_mode: None,
    })
}

/// One recursive step: level `n` to level `n + 1`.
fn p2dual_step(prev: &PipelineArtifact, script: &Script, note: &dyn Fn(String)) -> Result<PipelineArtifact> {
    let k = prev.spec.n + 1;
    let start = Instant::now();
    let phase = |what: &str, cells: usize| {
        note(format!("  {what}: {cells} cells ({:.1}s)", start.elapsed().as_secs_f64()));
    };
    let base = prev.triangulation.subdivision();
    let mut steps = prev.provenance.clone();

    let columns = pullback_restricted(base, -1, |y| sylvester::slanted_height(k, y))?;
    let w_columns = regularity::witness_pullback(base, &prev.witness, &columns)?;
    phase("columns", columns.num_cells());
    steps.push(ProvenanceStep {
        cells: Some(columns.num_cells()),
        ..ProvenanceStep::new(
            StepKind::ColumnPullback,
            k,
            "columns over the previous cells between the bottom facet and the slanted hyperplane; \
             witness composed with the projection",
        )
    });

    let slanted: IntHalfSpace = sylvester::slanted_hyperplane(k)?;
    let top = restrict_to_hyperplane(&columns, &slanted)?;
    steps.push(ProvenanceStep {
        cells: Some(top.num_cells()),
        ..ProvenanceStep::new(
            StepKind::SlantedRestriction,
            k,
            "subdivision induced on the slanted hyperplane by the columns",
        )
    });

    let z = sylvester::p2dual_apex(k)?;
    let cone = cone_subdivision(&z, &top)?;
    let w_top = regularity::witness_pullback(base, &prev.witness, &top)?;
    // ensures the cone cells hold no lattice points beyond their vertices
    regularity::witness_cone(&top, &w_top, &cone, &z, &BigRat::zero())?;
    steps.push(ProvenanceStep {
        cells: Some(cone.num_cells()),
        ..ProvenanceStep::new(
            StepKind::ApexCone,
            k,
            "cone from the apex over the slanted subdivision; the apex is the only lattice \
             point above the slanted hyperplane",
        )
        .with_apex(&z)
    });

    phase("apex cone", cone.num_cells());
    let glued = glue(&columns, &cone)?;
    let omega = match script.find(StepKind::ApexGlue, k)? {
        Some(step) => step.recorded_omega()?,
        None => regularity::glue_omega(&columns, &w_columns, &z)?,
    };
    let w_glued = regularity::witness_extend(&columns, &w_columns, &glued, &z, &omega)?;
    steps.push(ProvenanceStep {
        omega: Some(format_rat(&omega)),
        cells: Some(glued.num_cells()),
        ..ProvenanceStep::new(
            StepKind::ApexGlue,
            k,
            "columns and apex cone glued along the slanted hyperplane; the apex value exceeds \
             every column function at the apex by one",
        )
        .with_apex(&z)
    });

    let recorded = match script.find(StepKind::PullAll, k)? {
        Some(step) => Some(step.recorded_epsilons()?),
        None => None,
    };
    phase("glued", glued.num_cells());
    let (t, w, eps) = regularity::pull_all_with_witness(&glued, &w_glued, recorded.as_deref())?;
    phase("pulled", t.num_cells());
    steps.push(ProvenanceStep {
        epsilons: eps.iter().map(format_rat).collect(),
        cells: Some(t.num_cells()),
        ..ProvenanceStep::new(
            StepKind::PullAll,
            k,
            "pulled at every lattice point in lexicographic order; each pull lowers the witness \
             at the pulled point by the largest power of two keeping it strictly convex",
        )
    });

    Ok(PipelineArtifact {
        spec: FamilySpec::new(Family::P2dual, k)?,
        triangulation: t,
        witness: w,
        provenance: steps,
        regularity_mode: None,
    })
}

fn p2_from_dual(dual: &PipelineArtifact) -> Result<PipelineArtifact> {
    let n = dual.spec.n;
    let t = sylvester::duality_map(n)?;
    let map = LatticeMap::linear(t.inverse_matrix().to_vec())?;
    let (s, perm) = apply_lattice_map(dual.triangulation.subdivision(), &map)?;
    let w = regularity::transport(&dual.witness, &perm)?;
    let mut steps = dual.provenance.clone();
    steps.push(ProvenanceStep {
        cells: Some(s.num_cells()),
        ..ProvenanceStep::new(
            StepKind::DualityTransport,
            n,
            "image under the inverse of the unimodular duality map; witness values follow their points",
        )
    });
    Ok(PipelineArtifact {
        spec: FamilySpec::new(Family::P2, n)?,
        triangulation: Triangulation::new(s)?,
        witness: w,
        provenance: steps,
        regularity_mode: None,
    })
}

fn p1_from_p2(p2: &PipelineArtifact, script: &Script) -> Result<PipelineArtifact> {
    let n = p2.spec.n;
    let k = n + 1;
    let mut steps = p2.provenance.clone();
    let base = p2.triangulation.embed(0)?;
    steps.push(ProvenanceStep {
        cells: Some(base.num_cells()),
        ..ProvenanceStep::new(StepKind::Embed, k, "triangulation placed in the hyperplane x_n = 0")
    });

    let e = LatticePoint::unit(k, n);
    let minus = cone_subdivision(&e, &base)?;
    let w_minus = regularity::witness_cone(&base, &p2.witness, &minus, &e, &BigRat::zero())?;
    steps.push(ProvenanceStep {
        omega: Some("0".into()),
        cells: Some(minus.num_cells()),
        ..ProvenanceStep::new(
            StepKind::VertexCone,
            k,
            "cone from e_n over the embedded triangulation; the apex value is free and set to 0",
        )
        .with_apex(&e)
    });

    let z = sylvester::w1(k)?;
    let plus = cone_subdivision(&z, &base)?;
    let glued = glue(&minus, &plus)?;
    let omega = match script.find(StepKind::ApexGlue, k)? {
        Some(step) => step.recorded_omega()?,
        None => regularity::glue_omega(&minus, &w_minus, &z)?,
    };
    regularity::witness_cone(&base, &p2.witness, &plus, &z, &omega)?;
    let w = regularity::witness_extend(&minus, &w_minus, &glued, &z, &omega)?;
    steps.push(ProvenanceStep {
        omega: Some(format_rat(&omega)),
        cells: Some(glued.num_cells()),
        ..ProvenanceStep::new(
            StepKind::ApexGlue,
            k,
            "cone from w_1 glued to the e_n cone along x_n = 0; the apex value exceeds every \
             cell function of the e_n cone at w_1 by one",
        )
        .with_apex(&z)
    });
    Ok(PipelineArtifact {
        spec: FamilySpec::new(Family::P1, k)?,
        triangulation: Triangulation::new(glued)?,
        witness: w,
        provenance: steps,
        regularity_mode: None,
    })
}

/// Re-executes the construction with the apex values and decrements
/// recorded in `a`'s provenance.
pub fn replay(a: &PipelineArtifact) -> Result<PipelineArtifact> {
    let script = Script(Some(&a.provenance));
    let top = match a.spec.family {
        Family::P1 => a.spec.n - 1,
        _ => a.spec.n,
    };
    let mut cur = p2dual_base()?;
    for _ in 2..=top {
        cur = p2dual_step(&cur, &script, &|_| {})?;
    }
    if a.spec.family != Family::P2dual {
        cur = p2_from_dual(&cur)?;
    }
    if a.spec.family == Family::P1 {
        cur = p1_from_p2(&cur, &script)?;
    }
    cur.regularity_mode = a.regularity_mode;
    Ok(cur)
}

/// Number of cells of `t` containing the store point `z`.
pub fn cells_containing(t: &Subdivision, z: &LatticePoint) -> usize {
    match t.store().index_of(z) {
        Some(i) => t.cells().filter(|c| c.contains(&i)).count(),
        None => 0,
    }
}

/// Largest witness denominator, as a power-of-two exponent when it is one.
pub fn witness_denominator_bits(w: &RegularityWitness) -> Option<u64> {
    w.values()
        .iter()
        .map(|v| {
            let d = v.denom();
            (d.magnitude().count_ones() == 1).then(|| d.bits() - 1)
        })
        .try_fold(0u64, |acc, b| b.map(|b| acc.max(b)))
}
