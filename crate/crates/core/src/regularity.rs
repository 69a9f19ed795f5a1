//! Regularity witnesses: one exact value per store point whose lower
//! envelope is strictly convex with the cells as its domains of linearity.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{format_rat, parse_rat, BigInt, BigRat};
use crate::geometry::hull::{self, Barycentric, Frame, IntHalfSpace};
use crate::geometry::LatticePoint;
use crate::subdivision::{shared_simplex_facets, PullEngine, Subdivision, Triangulation};

/// Exact values aligned with a point store.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RegularityWitness {
    values: Vec<BigRat>,
}

impl RegularityWitness {
    pub fn new(values: Vec<BigRat>) -> Self {
        RegularityWitness { values }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| BigRat::from_integer(v.into())).collect())
    }

    pub fn values(&self) -> &[BigRat] {
        &self.values
    }

    pub fn into_values(self) -> Vec<BigRat> {
        self.values
    }

    pub fn get(&self, i: u32) -> &BigRat {
        &self.values[i as usize]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, factor: &BigRat) -> Self {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// Values as `"p/q"` strings (integers without a denominator).
    pub fn to_strings(&self) -> Vec<String> {
        self.values.iter().map(format_rat).collect()
    }

    pub fn from_strings<S: AsRef<str>>(values: &[S]) -> Result<Self> {
        values
            .iter()
            .enumerate()
            .map(|(i, s)| {
                parse_rat(s.as_ref()).ok_or_else(|| Error::Parse {
                    location: format!("witness[{i}]"),
                    message: format!("not a rational number: {:?}", s.as_ref()),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    /// Common denominator and the integer numerators over it.
    fn integral(&self) -> (BigInt, Vec<BigInt>) {
        let den = self
            .values
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let nums = self.values.iter().map(|v| v.numer() * (&den / v.denom())).collect();
        (den, nums)
    }

    fn check_len(&self, s: &Subdivision) -> Result<()> {
        if self.len() != s.store().len() {
            return Err(Error::Argument(format!(
                "witness has {} values for a store of {} points",
                self.len(),
                s.store().len()
            )));
        }
        Ok(())
    }
}

impl Serialize for RegularityWitness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.values.iter().map(format_rat))
    }
}

impl<'de> Deserialize<'de> for RegularityWitness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        Self::from_strings(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    /// Every cell against every store point.
    #[serde(rename = "full")]
    Full,
    /// Every interior facet of a simplicial subdivision, plus a seeded
    /// random sample of (cell, point) pairs.
    #[serde(rename = "local+sampled")]
    LocalSampled,
}

impl std::fmt::Display for CheckMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckMode::Full => "full",
            CheckMode::LocalSampled => "local+sampled",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegularityOptions {
    pub mode: CheckMode,
    pub samples: usize,
    pub seed: u64,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            mode: CheckMode::Full,
            samples: 100_000,
            seed: 0,
        }
    }
}

/// A (cell, point) pair breaking strict convexity; `margin` is the witness
/// value minus the cell's affine function at the point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub cell: usize,
    pub point: u32,
    pub margin: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateReport {
    pub regular: bool,
    pub violating_pairs: Vec<Violation>,
    pub mode: CheckMode,
    pub checked_pairs: u64,
}

const MAX_REPORTED: usize = 64;

/// The affine function of a witness on one cell, in frame coordinates, with
/// the cell's facets for containment tests.
struct CellCheck {
    bary: Barycentric,
    basis: Vec<u32>,
    verts: Vec<u32>,
    facets: Option<Vec<IntHalfSpace>>,
}

impl CellCheck {
    fn new(cell: &[u32], proj: &[Vec<i64>], d: usize) -> Result<Self> {
        let refs: Vec<&[i64]> = cell.iter().map(|&i| proj[i as usize].as_slice()).collect();
        if cell.len() == d + 1 {
            let bary = Barycentric::new(&refs)?
                .ok_or_else(|| Error::Degenerate("cell of zero volume".into()))?;
            return Ok(CellCheck { bary, basis: cell.to_vec(), verts: cell.to_vec(), facets: None });
        }
        let verts: Vec<u32> = hull::vertex_indices(&refs)?.into_iter().map(|j| cell[j]).collect();
        let mut basis: Vec<u32> = Vec::new();
        for &v in &verts {
            basis.push(v);
            let r: Vec<&[i64]> = basis.iter().map(|&b| proj[b as usize].as_slice()).collect();
            if hull::affine_rank_int(&r) + 1 != basis.len() {
                basis.pop();
            }
            if basis.len() == d + 1 {
                break;
            }
        }
        let r: Vec<&[i64]> = basis.iter().map(|&b| proj[b as usize].as_slice()).collect();
        let bary = Barycentric::new(&r)?
            .ok_or_else(|| Error::Degenerate("cell without an affine basis".into()))?;
        let vrefs: Vec<&[i64]> = verts.iter().map(|&i| proj[i as usize].as_slice()).collect();
        let facets = hull::hull_facets(&vrefs)?.into_iter().map(|f| f.ineq).collect();
        Ok(CellCheck { bary, basis, verts, facets: Some(facets) })
    }

    /// `det * (W(p) - A(p))` with the sign of `det` normalized to positive,
    /// where `W` are integral witness values.
    fn scaled_margin(&self, p: u32, proj: &[Vec<i64>], w: &[BigInt]) -> BigInt {
        let x = &proj[p as usize];
        let mut val = BigInt::zero();
        for (i, &v) in self.basis.iter().enumerate() {
            let lam = self.bary.scaled(i, x);
            if lam != 0 {
                val += &w[v as usize] * BigInt::from(lam);
            }
        }
        let m = &w[p as usize] * BigInt::from(self.bary.det) - val;
        if self.bary.det < 0 {
            -m
        } else {
            m
        }
    }

    fn contains(&self, p: u32, proj: &[Vec<i64>]) -> bool {
        let x = &proj[p as usize];
        match &self.facets {
            Some(f) => f.iter().all(|h| h.eval(x) >= 0),
            None => {
                let s = self.bary.det.signum();
                (0..self.basis.len()).all(|i| self.bary.scaled(i, x) * s >= 0)
            }
        }
    }

    /// `None` when the pair is fine, otherwise the scaled margin.
    fn judge(&self, p: u32, proj: &[Vec<i64>], w: &[BigInt]) -> Option<BigInt> {
        let m = self.scaled_margin(p, proj, w);
        let ok = if self.verts.contains(&p) {
            m.is_zero()
        } else if self.contains(p, proj) {
            !m.is_negative()
        } else {
            m.is_positive()
        };
        (!ok).then_some(m)
    }
}

fn frame_coords(s: &Subdivision) -> Vec<Vec<i64>> {
    let refs: Vec<&[i64]> = s.ambient().iter().map(|p| p.coords()).collect();
    let frame = Frame::of(&refs);
    s.store().points().iter().map(|p| frame.project(p)).collect()
}

pub fn verify_regularity(s: &Subdivision, w: &RegularityWitness) -> Result<CertificateReport> {
    verify_regularity_with(s, w, &RegularityOptions::default())
}

/// Checks that for every cell the affine interpolant of `w` on the cell lies
/// strictly below `w` at every store point outside the cell, weakly below at
/// the points inside it, and through its vertices.
///
/// In local mode only adjacent cells are compared across each interior
/// facet; for a subdivision of a convex polytope this already forces global
/// strict convexity. The random sample re-checks arbitrary pairs.
pub fn verify_regularity_with(
    s: &Subdivision,
    w: &RegularityWitness,
    opts: &RegularityOptions,
) -> Result<CertificateReport> {
    w.check_len(s)?;
    let proj = frame_coords(s);
    let d = s.dim();
    let (den, ints) = w.integral();
    let n = s.store().len() as u32;

    let checks = |cell: usize, points: &mut dyn Iterator<Item = u32>| -> Result<(u64, Vec<Violation>)> {
        let c = CellCheck::new(s.cell(cell), &proj, d)?;
        let mut count = 0;
        let mut bad = Vec::new();
        for p in points {
            count += 1;
            if let Some(m) = c.judge(p, &proj, &ints) {
                if bad.len() < MAX_REPORTED {
                    let margin = BigRat::new(m, BigInt::from(c.bary.det.abs()) * &den);
                    bad.push(Violation { cell, point: p, margin: format_rat(&margin) });
                }
            }
        }
        Ok((count, bad))
    };

    let per_cell: Vec<Result<(u64, Vec<Violation>)>> = match opts.mode {
        CheckMode::Full => (0..s.num_cells())
            .into_par_iter()
            .map(|c| checks(c, &mut (0..n)))
            .collect(),
        CheckMode::LocalSampled => {
            if !s.is_simplicial() {
                return Err(Error::Argument("local regularity checks need a simplicial subdivision".into()));
            }
            let mut pairs: Vec<(u32, u32)> = Vec::new();
            for ((a, oa), (b, ob)) in shared_simplex_facets(s) {
                pairs.push((a, s.cell(b as usize)[ob as usize]));
                pairs.push((b, s.cell(a as usize)[oa as usize]));
            }
            if s.num_cells() > 0 && n > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                for _ in 0..opts.samples {
                    pairs.push((rng.random_range(0..s.num_cells() as u32), rng.random_range(0..n)));
                }
            }
            pairs.par_sort_unstable();
            pairs.dedup();
            let mut groups: Vec<&[(u32, u32)]> = pairs.chunk_by(|a, b| a.0 == b.0).collect();
            groups
                .par_iter_mut()
                .map(|g| checks(g[0].0 as usize, &mut g.iter().map(|x| x.1)))
                .collect()
        }
    };
    let mut checked_pairs = 0;
    let mut violating_pairs = Vec::new();
    for r in per_cell {
        let (count, bad) = r?;
        checked_pairs += count;
        for v in bad {
            if violating_pairs.len() < MAX_REPORTED {
                violating_pairs.push(v);
            }
        }
    }
    Ok(CertificateReport {
        regular: violating_pairs.is_empty(),
        violating_pairs,
        mode: opts.mode,
        checked_pairs,
    })
}

/// Witness on a pullback: the value at `(y, t)` is the base value at `y`.
pub fn witness_pullback(
    base: &Subdivision,
    w: &RegularityWitness,
    lifted: &Subdivision,
) -> Result<RegularityWitness> {
    w.check_len(base)?;
    lifted
        .store()
        .points()
        .iter()
        .map(|p| {
            let y = p.project();
            base.store()
                .index_of(&y)
                .map(|i| w.get(i).clone())
                .ok_or_else(|| Error::Domain(format!("projection {y} of {p} has no witness value")))
        })
        .collect::<Result<Vec<_>>>()
        .map(RegularityWitness::new)
}

/// Lattice points of `cell` (store indices in `s`) missing from the store,
/// skipping unimodular simplices, which have none.
fn missing_lattice_points(s: &Subdivision, cell: usize) -> Result<Option<LatticePoint>> {
    let c = s.cell(cell);
    if c.len() == s.dim() + 1 && s.cell_nvol(cell)?.is_one() {
        return Ok(None);
    }
    let poly = crate::geometry::CellPolytope::from_points(&s.cell_points(cell))?;
    Ok(poly
        .lattice_points_bruteforce()?
        .into_iter()
        .find(|p| !s.store().contains(p)))
}

/// Witness on `cone = Cone(z, base)`: base values kept, `omega` at the apex.
pub fn witness_cone(
    base: &Subdivision,
    w: &RegularityWitness,
    cone: &Subdivision,
    z: &LatticePoint,
    omega: &BigRat,
) -> Result<RegularityWitness> {
    w.check_len(base)?;
    let values = cone
        .store()
        .points()
        .iter()
        .map(|p| {
            if p == z {
                Ok(omega.clone())
            } else {
                base.store().index_of(p).map(|i| w.get(i).clone()).ok_or_else(|| {
                    Error::UnsupportedStore(format!("cone store point {p} is neither the apex nor a base point"))
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    for cell in 0..cone.num_cells() {
        if let Some(p) = missing_lattice_points(cone, cell)? {
            return Err(Error::UnsupportedStore(format!(
                "cone cell {cell} contains the lattice point {p} outside the store"
            )));
        }
    }
    Ok(RegularityWitness::new(values))
}

/// Value at `x` of the affine function of `w` on every cell of `s`,
/// maximized over the cells.
pub fn max_cell_value(s: &Subdivision, w: &RegularityWitness, x: &LatticePoint) -> Result<BigRat> {
    w.check_len(s)?;
    if s.dim() != s.ambient_dim() {
        return Err(Error::Degenerate("cell values need a full-dimensional subdivision".into()));
    }
    let proj: Vec<Vec<i64>> = s.store().points().iter().map(|p| p.coords().to_vec()).collect();
    let values: Vec<Result<BigRat>> = (0..s.num_cells())
        .into_par_iter()
        .map(|c| {
            let check = CellCheck::new(s.cell(c), &proj, s.dim())?;
            let mut acc = BigRat::zero();
            for (i, &v) in check.basis.iter().enumerate() {
                acc += w.get(v) * BigRat::from_integer(check.bary.scaled(i, x).into());
            }
            Ok(acc / BigRat::from_integer(check.bary.det.into()))
        })
        .collect();
    let mut best: Option<BigRat> = None;
    for v in values {
        let v = v?;
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    best.ok_or_else(|| Error::Argument("subdivision without cells".into()))
}

/// The apex value used when gluing `Cone(z, .)` onto `minus`: one more than
/// the largest cell function of `minus` at `z`.
pub fn glue_omega(minus: &Subdivision, w_minus: &RegularityWitness, z: &LatticePoint) -> Result<BigRat> {
    Ok(max_cell_value(minus, w_minus, z)? + BigRat::one())
}

/// Extends `w_minus` to the glued subdivision with value `omega` at `z`.
pub fn witness_extend(
    minus: &Subdivision,
    w_minus: &RegularityWitness,
    glued: &Subdivision,
    z: &LatticePoint,
    omega: &BigRat,
) -> Result<RegularityWitness> {
    w_minus.check_len(minus)?;
    glued
        .store()
        .points()
        .iter()
        .map(|p| {
            if p == z {
                Ok(omega.clone())
            } else {
                minus.store().index_of(p).map(|i| w_minus.get(i).clone()).ok_or_else(|| {
                    Error::UnsupportedStore(format!("glued store point {p} lies strictly inside the cone"))
                })
            }
        })
        .collect::<Result<Vec<_>>>()
        .map(RegularityWitness::new)
}

/// Witness for `glued = glue(minus, Cone(z, .))` together with the apex
/// value chosen.
pub fn witness_glue(
    minus: &Subdivision,
    w_minus: &RegularityWitness,
    glued: &Subdivision,
    z: &LatticePoint,
) -> Result<(RegularityWitness, BigRat)> {
    let omega = glue_omega(minus, w_minus, z)?;
    Ok((witness_extend(minus, w_minus, glued, z, &omega)?, omega))
}

/// Pulls `s` at `m`, lowering the witness at `m` by the largest power of two
/// that keeps it strictly convex on the refined subdivision.
pub fn witness_pull(
    s: &Subdivision,
    w: &RegularityWitness,
    m: u32,
) -> Result<(Subdivision, RegularityWitness, BigRat)> {
    w.check_len(s)?;
    if m as usize >= s.store().len() {
        return Err(Error::Argument("pulled point is not in the store".into()));
    }
    let mut e = PullEngine::new(s, Some(w.values.clone()))?;
    let step = e.pull(m, None)?;
    let (t, values) = e.into_parts()?;
    Ok((t, RegularityWitness::new(values.unwrap()), step.epsilon.unwrap()))
}

/// Pulls every store point in lexicographic order while updating the
/// witness. With `epsilons` given, those decrements are used (and checked)
/// instead of being searched for. Returns the decrement used per point.
pub fn pull_all_with_witness(
    s: &Subdivision,
    w: &RegularityWitness,
    epsilons: Option<&[BigRat]>,
) -> Result<(Triangulation, RegularityWitness, Vec<BigRat>)> {
    w.check_len(s)?;
    let n = s.store().len();
    if epsilons.is_some_and(|e| e.len() != n) {
        return Err(Error::Argument("one decrement per store point is required".into()));
    }
    let mut e = PullEngine::new(s, Some(w.values.clone()))?;
    let mut used = Vec::with_capacity(n);
    for m in 0..n as u32 {
        let step = e.pull(m, epsilons.map(|x| &x[m as usize]))?;
        used.push(step.epsilon.unwrap());
    }
    let (t, values) = e.into_parts()?;
    Ok((Triangulation::new(t)?, RegularityWitness::new(values.unwrap()), used))
}

/// Reorders a witness along a store permutation `old index -> new index`.
pub fn transport(w: &RegularityWitness, perm: &[u32]) -> Result<RegularityWitness> {
    if perm.len() != w.len() {
        return Err(Error::Argument("permutation and witness lengths differ".into()));
    }
    let mut values = vec![BigRat::zero(); w.len()];
    for (i, &j) in perm.iter().enumerate() {
        values[j as usize] = w.values[i].clone();
    }
    Ok(RegularityWitness::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn pts(rows: &[&[i64]]) -> Vec<LatticePoint> {
        rows.iter().map(|r| LatticePoint::new(r.to_vec())).collect()
    }

    fn segment() -> Subdivision {
        Subdivision::from_point_cells(
            &pts(&[&[-1], &[1]]),
            &[pts(&[&[-1], &[0]]), pts(&[&[0], &[1]])],
            &[],
        )
        .unwrap()
    }

    #[test]
    fn segment_witnesses() {
        let s = segment();
        let good = verify_regularity(&s, &RegularityWitness::from_ints(&[1, 0, 1])).unwrap();
        assert!(good.regular);
        assert_eq!(good.checked_pairs, 6);
        let flat = verify_regularity(&s, &RegularityWitness::from_ints(&[0, 0, 0])).unwrap();
        assert!(!flat.regular);
        assert_eq!(flat.violating_pairs[0].margin, "0");
    }

    #[test]
    fn pull_on_segment_lowers_midpoint() {
        let s = Subdivision::from_point_cells(&pts(&[&[-1], &[1]]), &[pts(&[&[-1], &[1]])], &pts(&[&[0]]))
            .unwrap();
        let w = RegularityWitness::from_ints(&[1, 1, 1]);
        let (t, w2, eps) = witness_pull(&s, &w, 1).unwrap();
        assert_eq!(t, segment());
        assert_eq!(eps, BigRat::one());
        assert_eq!(w2.values(), RegularityWitness::from_ints(&[1, 0, 1]).values());
        assert!(verify_regularity(&t, &w2).unwrap().regular);
    }

    #[test]
    fn cone_witness_any_apex_value() {
        let base = segment().embed(0).unwrap();
        let w = RegularityWitness::from_ints(&[1, 0, 1]);
        let z = LatticePoint::new(vec![0, 1]);
        let cone = crate::subdivision::cone_subdivision(&z, &base).unwrap();
        for omega in [-5, 0, 7] {
            let wc = witness_cone(&base, &w, &cone, &z, &BigRat::from_integer(omega.into())).unwrap();
            assert_eq!(wc.len(), 4);
            assert!(verify_regularity(&cone, &wc).unwrap().regular);
        }
        let tall = LatticePoint::new(vec![0, 2]);
        let cone = crate::subdivision::cone_subdivision(&tall, &base).unwrap();
        assert!(matches!(
            witness_cone(&base, &w, &cone, &tall, &BigRat::zero()),
            Err(Error::UnsupportedStore(_))
        ));
    }

    #[test]
    fn local_mode_matches_full_on_small_cases() {
        let s = segment();
        let opts = RegularityOptions { mode: CheckMode::LocalSampled, samples: 10, seed: 1 };
        for (w, expect) in [([1, 0, 1], true), ([0, 0, 0], false), ([0, 1, 0], false)] {
            let w = RegularityWitness::from_ints(&w);
            assert_eq!(verify_regularity_with(&s, &w, &opts).unwrap().regular, expect);
            assert_eq!(verify_regularity(&s, &w).unwrap().regular, expect);
        }
    }

    #[test]
    fn witness_strings_round_trip() {
        let w = RegularityWitness::new(vec![ratio(1, 2), ratio(-3, 1), BigRat::zero()]);
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"["1/2","-3","0"]"#);
        assert_eq!(serde_json::from_str::<RegularityWitness>(&json).unwrap(), w);
    }

    #[test]
    fn transport_permutes() {
        let w = RegularityWitness::from_ints(&[5, 6, 7]);
        assert_eq!(transport(&w, &[2, 0, 1]).unwrap(), RegularityWitness::from_ints(&[6, 7, 5]));
    }
}
