use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::exact::{BigInt, BigRat};
use crate::geometry::hull::{self, Barycentric, Frame, IntHalfSpace};
use crate::subdivision::Subdivision;

/// When to run the quadratic pairwise intersection check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairwiseCheck {
    /// Only for simplicial subdivisions of dimension at most 2.
    Auto,
    Always,
    Never,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub pairwise: PairwiseCheck,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            pairwise: PairwiseCheck::Auto,
        }
    }
}

/// Outcome of [`verify`]. `valid` covers the covering, containment and
/// face-to-face conditions; the other flags are independent of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub valid: bool,
    pub simplicial: bool,
    pub unimodular: bool,
    #[serde(serialize_with = "crate::exact::serialize_bigint")]
    pub volume_checksum: BigInt,
    #[serde(serialize_with = "crate::exact::serialize_bigint")]
    pub ambient_nvol: BigInt,
    pub cells: usize,
    pub pairwise_checked: bool,
    pub reasons: Vec<String>,
}

pub fn verify(s: &Subdivision) -> Result<VerifyReport> {
    verify_with(s, &VerifyOptions::default())
}

/// Checks that the cells of `s` cover its polytope exactly once and meet
/// face to face:
///
/// * every cell is full-dimensional and lies inside the polytope;
/// * the normalized volumes of the cells add up to that of the polytope;
/// * every cell facet is either on the boundary of the polytope and belongs
///   to exactly one cell, or is shared by exactly two cells lying on opposite
///   sides of it.
///
/// Together these force a proper subdivision. Optionally every pair of cells
/// is also tested directly.
pub fn verify_with(s: &Subdivision, opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut reasons = Vec::new();
    let frame = {
        let refs: Vec<&[i64]> = s.ambient().iter().map(|p| p.coords()).collect();
        Frame::of(&refs)
    };
    let d = s.dim();
    let proj: Vec<Vec<i64>> = s.store().points().iter().map(|p| frame.project(p)).collect();
    let ambient_proj: Vec<Vec<i64>> = s.ambient().iter().map(|p| frame.project(p)).collect();
    let ambient_refs: Vec<&[i64]> = ambient_proj.iter().map(Vec::as_slice).collect();
    let ambient_facets: Vec<IntHalfSpace> = hull::relative_facets(&ambient_refs, &Frame::of(&ambient_refs))?
        .into_iter()
        .map(|f| f.ineq)
        .collect();

    let used = s.used_points();
    if !frame.is_full() {
        if let Some(&i) = used.iter().find(|&&i| !frame.contains_affinely(s.store().get(i))) {
            reasons.push(format!(
                "point {} of a cell leaves the affine hull of the polytope",
                s.store().get(i)
            ));
        }
    }
    if let Some(&i) = used
        .iter()
        .find(|&&i| ambient_facets.iter().any(|f| f.eval(&proj[i as usize]) < 0))
    {
        reasons.push(format!("point {} of a cell lies outside the polytope", s.store().get(i)));
    }

    let simplicial = s.is_simplicial();
    let vols: Vec<Result<BigInt>> = (0..s.num_cells())
        .into_par_iter()
        .map(|i| s.cell_nvol(i))
        .collect();
    let vols = vols.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(i) = vols.iter().position(Zero::is_zero) {
        reasons.push(format!("cell {i} is not full-dimensional"));
    }
    let volume_checksum: BigInt = vols.iter().sum();
    let ambient_nvol = s.ambient_nvol()?;
    if volume_checksum != ambient_nvol {
        reasons.push(format!(
            "volume mismatch: cells sum to {volume_checksum}, polytope has {ambient_nvol}"
        ));
    }
    let unimodular = simplicial && vols.iter().all(One::is_one);

    if reasons.is_empty() {
        check_facets(s, &proj, &ambient_facets, d, &mut reasons)?;
    }

    let pairwise = match opts.pairwise {
        PairwiseCheck::Always => true,
        PairwiseCheck::Never => false,
        PairwiseCheck::Auto => simplicial && d <= 2,
    };
    let mut pairwise_checked = false;
    if pairwise && simplicial {
        pairwise_checked = true;
        if let Some((a, b)) = first_improper_pair(s, &proj) {
            reasons.push(format!("interiors intersect: cells {a} and {b}"));
        }
    }

    Ok(VerifyReport {
        valid: reasons.is_empty(),
        simplicial,
        unimodular,
        volume_checksum,
        ambient_nvol,
        cells: s.num_cells(),
        pairwise_checked,
        reasons,
    })
}

/// One record per (cell, facet): the facet's vertex ids and the side of the
/// facet hyperplane the cell lies on.
struct FacetRecord {
    key: Vec<u32>,
    hyperplane: IntHalfSpace,
}

fn cell_facets(cell: &[u32], proj: &[Vec<i64>], d: usize) -> Result<Vec<FacetRecord>> {
    let pts: Vec<&[i64]> = cell.iter().map(|&i| proj[i as usize].as_slice()).collect();
    if cell.len() == d + 1 {
        let Some(b) = Barycentric::new(&pts)? else {
            return Ok(Vec::new());
        };
        (0..cell.len())
            .map(|i| {
                Ok(FacetRecord {
                    key: cell.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect(),
                    hyperplane: b.facet(i)?,
                })
            })
            .collect()
    } else {
        Ok(hull::hull_facets(&pts)?
            .into_iter()
            .map(|f| FacetRecord {
                key: f.members.iter().map(|&j| cell[j]).collect(),
                hyperplane: f.ineq,
            })
            .collect())
    }
}

fn check_facets(
    s: &Subdivision,
    proj: &[Vec<i64>],
    ambient_facets: &[IntHalfSpace],
    d: usize,
    reasons: &mut Vec<String>,
) -> Result<()> {
    if d == 0 {
        return Ok(());
    }
    if s.is_simplicial() {
        return check_simplex_facets(s, proj, ambient_facets, d, reasons);
    }
    let per_cell: Vec<Result<Vec<FacetRecord>>> = (0..s.num_cells())
        .into_par_iter()
        .map(|i| cell_facets(s.cell(i), proj, d))
        .collect();
    let mut records: Vec<(Vec<u32>, u32, IntHalfSpace)> = Vec::new();
    for (i, r) in per_cell.into_iter().enumerate() {
        for f in r? {
            records.push((f.key, i as u32, f.hyperplane));
        }
    }
    records.par_sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut k = 0;
    while k < records.len() {
        let mut e = k + 1;
        while e < records.len() && records[e].0 == records[k].0 {
            e += 1;
        }
        let group = &records[k..e];
        let on_boundary = ambient_facets.iter().any(|f| *f == group[0].2);
        let same_side = (group.len() == 2).then(|| group[0].2 != group[1].2.negated());
        if let Some(msg) = judge(group.len(), on_boundary, same_side, group[0].1, group.get(1).map(|g| g.1)) {
            reasons.push(msg);
            return Ok(());
        }
        k = e;
    }
    Ok(())
}

/// Classifies one facet group; `same_side` is known for groups of two.
fn judge(
    count: usize,
    on_boundary: bool,
    same_side: Option<bool>,
    first: u32,
    second: Option<u32>,
) -> Option<String> {
    match (count, on_boundary) {
        (1, true) => None,
        (1, false) => Some(format!(
            "facet of cell {first} is interior but belongs to no other cell"
        )),
        (2, false) if same_side == Some(false) => None,
        (2, false) => Some(format!(
            "interiors intersect: cells {first} and {} lie on the same side of a shared facet",
            second.unwrap()
        )),
        (n, _) => Some(format!("a facet is shared by {n} cells")),
    }
}

/// Facet pairing for simplicial subdivisions without materializing facet
/// keys: records are (cell, omitted vertex position) sorted by the implied
/// facet.
fn check_simplex_facets(
    s: &Subdivision,
    proj: &[Vec<i64>],
    ambient_facets: &[IntHalfSpace],
    d: usize,
    reasons: &mut Vec<String>,
) -> Result<()> {
    let key = |r: (u32, u8)| {
        let c = s.cell(r.0 as usize);
        c.iter()
            .enumerate()
            .filter(move |&(j, _)| j != r.1 as usize)
            .map(|(_, &v)| v)
    };
    let mut records: Vec<(u32, u8)> = (0..s.num_cells() as u32)
        .flat_map(|c| (0..=d as u8).map(move |o| (c, o)))
        .collect();
    records.par_sort_unstable_by(|&a, &b| key(a).cmp(key(b)).then(a.0.cmp(&b.0)));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < records.len() {
        let mut e = k + 1;
        while e < records.len() && key(records[e]).eq(key(records[k])) {
            e += 1;
        }
        groups.push((k, e));
        k = e;
    }
    let verdicts: Vec<Result<Option<String>>> = groups
        .par_iter()
        .map(|&(k, e)| {
            let group = &records[k..e];
            let facet: Vec<&[i64]> = key(group[0]).map(|v| proj[v as usize].as_slice()).collect();
            let on_boundary = ambient_facets
                .iter()
                .any(|f| facet.iter().all(|p| f.eval(p) == 0));
            let same_side = if group.len() == 2 {
                let h = hull::hyperplane_through(&facet)?.ok_or_else(|| {
                    crate::error::Error::Degenerate("degenerate cell facet".into())
                })?;
                let apex = |r: (u32, u8)| s.cell(r.0 as usize)[r.1 as usize];
                let a = h.eval(&proj[apex(group[0]) as usize]).signum();
                let b = h.eval(&proj[apex(group[1]) as usize]).signum();
                Some(a * b >= 0)
            } else {
                None
            };
            Ok(judge(group.len(), on_boundary, same_side, group[0].0, group.get(1).map(|g| g.0)))
        })
        .collect();
    for v in verdicts {
        if let Some(msg) = v? {
            reasons.push(msg);
            return Ok(());
        }
    }
    Ok(())
}

/// Facets shared by two cells of a simplicial subdivision, as pairs of
/// (cell, omitted vertex position).
pub(crate) fn shared_simplex_facets(s: &Subdivision) -> Vec<((u32, u8), (u32, u8))> {
    let d = s.dim();
    let key = |r: (u32, u8)| {
        let c = s.cell(r.0 as usize);
        c.iter()
            .enumerate()
            .filter(move |&(j, _)| j != r.1 as usize)
            .map(|(_, &v)| v)
    };
    let mut records: Vec<(u32, u8)> = (0..s.num_cells() as u32)
        .flat_map(|c| (0..=d as u8).map(move |o| (c, o)))
        .collect();
    records.par_sort_unstable_by(|&a, &b| key(a).cmp(key(b)).then(a.0.cmp(&b.0)));
    records
        .windows(2)
        .filter(|w| key(w[0]).eq(key(w[1])))
        .map(|w| (w[0], w[1]))
        .collect()
}

fn bbox(cell: &[u32], proj: &[Vec<i64>]) -> (Vec<i64>, Vec<i64>) {
    let d = proj[cell[0] as usize].len();
    let lo = (0..d).map(|j| cell.iter().map(|&i| proj[i as usize][j]).min().unwrap()).collect();
    let hi = (0..d).map(|j| cell.iter().map(|&i| proj[i as usize][j]).max().unwrap()).collect();
    (lo, hi)
}

fn first_improper_pair(s: &Subdivision, proj: &[Vec<i64>]) -> Option<(usize, usize)> {
    let boxes: Vec<(Vec<i64>, Vec<i64>)> = s.cells().map(|c| bbox(c, proj)).collect();
    let n = s.num_cells();
    (0..n).into_par_iter().find_map_first(|a| {
        for b in a + 1..n {
            let (la, ha) = &boxes[a];
            let (lb, hb) = &boxes[b];
            if (0..la.len()).any(|j| ha[j] < lb[j] || hb[j] < la[j]) {
                continue;
            }
            if improper(s.cell(a), s.cell(b), proj) {
                return Some((a, b));
            }
        }
        None
    })
}

/// Two simplices meet in a common face unless some circuit has its positive
/// part in one and its negative part in the other.
pub(crate) fn improper(a: &[u32], b: &[u32], proj: &[Vec<i64>]) -> bool {
    let d = proj[a[0] as usize].len();
    let na = a.len();
    let nb = b.len();
    for ma in 1u32..(1 << na) {
        let za: Vec<u32> = (0..na).filter(|&i| ma >> i & 1 == 1).map(|i| a[i]).collect();
        for mb in 1u32..(1 << nb) {
            let zb: Vec<u32> = (0..nb).filter(|&i| mb >> i & 1 == 1).map(|i| b[i]).collect();
            if za.len() + zb.len() > d + 2 || za.iter().any(|x| zb.contains(x)) {
                continue;
            }
            if is_signed_circuit(&za, &zb, proj) {
                return true;
            }
        }
    }
    false
}

/// Whether `pos ∪ neg` is a circuit whose unique affine dependence is
/// positive exactly on `pos`.
fn is_signed_circuit(pos: &[u32], neg: &[u32], proj: &[Vec<i64>]) -> bool {
    let cols: Vec<&Vec<i64>> = pos.iter().chain(neg).map(|&i| &proj[i as usize]).collect();
    let k = cols.len();
    let d = cols[0].len();
    // rows: coordinates and the all-ones row
    let mut m: Vec<Vec<BigRat>> = (0..=d)
        .map(|r| {
            cols.iter()
                .map(|c| BigRat::from(BigInt::from(if r < d { c[r] } else { 1 })))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].clone().recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..k {
                    let v = &m[row][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if pivots.len() + 1 != k {
        return false;
    }
    let free = (0..k).find(|c| !pivots.contains(c)).unwrap();
    let mut x = vec![BigRat::zero(); k];
    x[free] = BigRat::one();
    for (r, &pc) in pivots.iter().enumerate() {
        x[pc] = -m[r][free].clone();
    }
    let np = pos.len();
    let sign_ok = |s: bool| {
        x.iter().enumerate().all(|(i, v)| {
            if (i < np) == s {
                v.is_positive()
            } else {
                v.is_negative()
            }
        })
    };
    sign_ok(true) || sign_ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticePoint;

    fn pts(rows: &[&[i64]]) -> Vec<LatticePoint> {
        rows.iter().map(|r| LatticePoint::new(r.to_vec())).collect()
    }

    #[test]
    fn square_triangulation_is_valid() {
        let s = Subdivision::from_point_cells(
            &pts(&[&[0, 0], &[1, 0], &[0, 1], &[1, 1]]),
            &[pts(&[&[0, 0], &[1, 0], &[0, 1]]), pts(&[&[1, 1], &[1, 0], &[0, 1]])],
            &[],
        )
        .unwrap();
        let r = verify(&s).unwrap();
        assert!(r.valid, "{:?}", r.reasons);
        assert!(r.simplicial && r.unimodular && r.pairwise_checked);
        assert_eq!(r.volume_checksum, BigInt::from(2));
    }

    #[test]
    fn overlapping_cells_are_reported() {
        let s = Subdivision::from_point_cells(
            &pts(&[&[0, 0], &[2, 0], &[0, 2]]),
            &[
                pts(&[&[0, 0], &[2, 0], &[0, 2]]),
                pts(&[&[0, 0], &[1, 0], &[0, 1]]),
            ],
            &[],
        )
        .unwrap();
        let r = verify(&s).unwrap();
        assert!(!r.valid);
        assert!(r.reasons.iter().any(|m| m.contains("interiors intersect")), "{:?}", r.reasons);
    }

    #[test]
    fn hanging_vertex_breaks_facet_pairing() {
        // two triangles on one side of the diagonal, one big triangle on the
        // other: volumes add up but the facets do not match
        let s = Subdivision::from_point_cells(
            &pts(&[&[0, 0], &[2, 0], &[0, 2], &[2, 2]]),
            &[
                pts(&[&[0, 0], &[2, 0], &[0, 2]]),
                pts(&[&[2, 0], &[1, 1], &[2, 2]]),
                pts(&[&[0, 2], &[1, 1], &[2, 2]]),
            ],
            &[],
        )
        .unwrap();
        let r = verify_with(&s, &VerifyOptions { pairwise: PairwiseCheck::Never }).unwrap();
        assert!(!r.valid);
        assert!(r.reasons.iter().any(|m| m.contains("facet")), "{:?}", r.reasons);
    }

    #[test]
    fn lower_dimensional_subdivision() {
        let s = Subdivision::from_point_cells(
            &pts(&[&[-1, 0], &[1, 0]]),
            &[pts(&[&[-1, 0], &[0, 0]]), pts(&[&[0, 0], &[1, 0]])],
            &[],
        )
        .unwrap();
        let r = verify(&s).unwrap();
        assert!(r.valid && r.unimodular, "{:?}", r.reasons);
        assert_eq!(r.volume_checksum, BigInt::from(2));
    }
}
