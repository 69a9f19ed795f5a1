//! Fans of the toric resolutions defined by triangulations, and closed-form
//! invariant tables of the associated Calabi-Yau varieties.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{det_i64, serialize_bigint, BigInt};
use crate::geometry::{IntHalfSpace, LatticePoint};
use crate::subdivision::Subdivision;
use crate::sylvester::sylvester;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FanFlags {
    /// The cones cover space: their volumes add up to that of the polytope.
    pub complete: bool,
    /// Every maximal cone is generated by a lattice basis.
    pub smooth: bool,
    /// Every ray lies on the boundary of the polytope.
    pub crepant: bool,
    /// Every ray generator is a primitive vector.
    pub primitive: bool,
}

/// Rays are primitive lattice vectors; cones are sorted ray index sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolutionFan {
    pub rays: Vec<LatticePoint>,
    pub cones: Vec<Vec<u32>>,
    pub flags: FanFlags,
    pub cone_volume_sum: BigInt,
    pub polytope_nvol: BigInt,
}

#[derive(Serialize)]
struct FanJson<'a> {
    rays: Vec<Vec<String>>,
    cones: &'a [Vec<u32>],
    flags: FanFlags,
    #[serde(serialize_with = "serialize_bigint")]
    cone_volume_sum: &'a BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    polytope_nvol: &'a BigInt,
}

impl ResolutionFan {
    pub fn to_json(&self) -> Result<String> {
        let doc = FanJson {
            rays: self.rays.iter().map(|r| r.iter().map(i64::to_string).collect()).collect(),
            cones: &self.cones,
            flags: self.flags,
            cone_volume_sum: &self.cone_volume_sum,
            polytope_nvol: &self.polytope_nvol,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Invariant(e.to_string()))
    }
}

/// Fan over the boundary faces of a triangulation of a polytope containing
/// the origin in its interior: one cone per cell facet lying on the
/// boundary.
pub fn fan_from_triangulation(t: &Subdivision) -> Result<ResolutionFan> {
    let d = t.ambient_dim();
    if t.dim() != d {
        return Err(Error::Degenerate("fans need a full-dimensional triangulation".into()));
    }
    if !t.is_simplicial() {
        return Err(Error::Argument("fans need a simplicial subdivision".into()));
    }
    let facets: Vec<IntHalfSpace> = t.ambient_polytope().int_facets()?;
    let origin = vec![0i64; d];
    if facets.iter().any(|f| f.eval(&origin) <= 0) {
        return Err(Error::Domain("the origin is not an interior point of the polytope".into()));
    }
    if facets.len() > 64 {
        return Err(Error::Argument("polytopes with more than 64 facets are not supported".into()));
    }
    let pts = t.store().points();
    let on: Vec<u64> = pts
        .iter()
        .map(|p| {
            facets
                .iter()
                .enumerate()
                .filter(|(_, f)| f.eval(p) == 0)
                .fold(0u64, |m, (k, _)| m | 1 << k)
        })
        .collect();

    let mut cones: Vec<Vec<u32>> = Vec::new();
    for c in t.cells() {
        for omit in 0..c.len() {
            let face: Vec<u32> = c.iter().enumerate().filter(|&(j, _)| j != omit).map(|(_, &v)| v).collect();
            if face.iter().fold(u64::MAX, |m, &v| m & on[v as usize]) != 0 {
                cones.push(face);
            }
        }
    }
    let mut used: Vec<u32> = cones.iter().flatten().copied().collect();
    used.sort_unstable();
    used.dedup();
    let mut ray_index = vec![u32::MAX; pts.len()];
    for (k, &i) in used.iter().enumerate() {
        ray_index[i as usize] = k as u32;
    }
    let rays: Vec<LatticePoint> = used.iter().map(|&i| pts[i as usize].clone()).collect();
    for cone in &mut cones {
        for v in cone.iter_mut() {
            *v = ray_index[*v as usize];
        }
        cone.sort_unstable();
    }
    cones.sort_unstable();

    let dets: Vec<Result<BigInt>> = cones
        .par_iter()
        .map(|cone| {
            let rows: Vec<&[i64]> = cone.iter().map(|&r| rays[r as usize].coords()).collect();
            det_i64(&rows).map(|x| x.abs())
        })
        .collect();
    let dets = dets.into_iter().collect::<Result<Vec<_>>>()?;
    let smooth = dets.iter().all(One::is_one);
    let cone_volume_sum: BigInt = dets.iter().sum();
    let polytope_nvol = t.ambient_nvol()?;
    let complete = !dets.iter().any(Zero::is_zero) && cone_volume_sum == polytope_nvol;
    let crepant = rays
        .iter()
        .all(|r| facets.iter().all(|f| f.eval(r) >= 0) && facets.iter().any(|f| f.eval(r) == 0));
    let primitive = rays.iter().all(LatticePoint::is_primitive);
    Ok(ResolutionFan {
        rays,
        cones,
        flags: FanFlags { complete, smooth, crepant, primitive },
        cone_volume_sum,
        polytope_nvol,
    })
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("dimension must be at least 1".into()));
    }
    Ok(())
}

fn check_family(i: u8) -> Result<()> {
    if i != 1 && i != 2 {
        return Err(Error::Argument(format!("hypersurface family must be 1 or 2, got {i}")));
    }
    Ok(())
}

/// `prod_{j < k} (s_j - 1)`.
fn reduced_product(k: usize) -> BigInt {
    (0..k).map(|j| sylvester(j) - 1).product()
}

/// `(s_{n-1} - 1)(2 s_{n-1} - 3)`.
pub fn index_formula(n: usize) -> Result<BigInt> {
    check_n(n)?;
    let s = sylvester(n - 1);
    Ok((&s - 1) * (2 * &s - 3))
}

/// `2 prod_{j <= n} (s_j - 1)`.
pub fn betti_sum(n: usize) -> Result<BigInt> {
    check_n(n)?;
    Ok(2 * reduced_product(n + 1))
}

/// Middle Betti number for odd `n`; `None` for even `n`.
pub fn middle_betti(n: usize, i: u8) -> Result<Option<BigInt>> {
    check_n(n)?;
    check_family(i)?;
    if n % 2 == 0 {
        return Ok(None);
    }
    Ok(Some(match i {
        1 => reduced_product(n) * (2 * sylvester(n) - 4),
        _ => reduced_product(n + 1),
    }))
}

pub fn euler(n: usize, i: u8) -> Result<BigInt> {
    check_family(i)?;
    Ok(match middle_betti(n, i)? {
        None => betti_sum(n)?,
        Some(h) => betti_sum(n)? - 2 * h,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantReport {
    pub n: usize,
    pub family: u8,
    #[serde(serialize_with = "serialize_bigint")]
    pub index: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub betti_sum: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub euler: BigInt,
    /// `b_n`, the only odd-degree Betti number, for odd `n`.
    #[serde(serialize_with = "serialize_opt_bigint")]
    pub middle_betti: Option<BigInt>,
}

fn serialize_opt_bigint<S: serde::Serializer>(x: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

pub fn betti_euler(n: usize, i: u8) -> Result<InvariantReport> {
    Ok(InvariantReport {
        n,
        family: i,
        index: index_formula(n)?,
        betti_sum: betti_sum(n)?,
        euler: euler(n, i)?,
        middle_betti: middle_betti(n, i)?,
    })
}

/// Hodge numbers `h[p][q]` of a resolved hypersurface.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HodgeDiamond {
    pub n: usize,
    pub family: u8,
    pub h: Vec<Vec<u64>>,
}

impl HodgeDiamond {
    fn from_unique(n: usize, family: u8, entries: &[((usize, usize), u64)]) -> Self {
        let mut h = vec![vec![0u64; n + 1]; n + 1];
        for &((p, q), v) in entries {
            // Hodge symmetry and Serre duality fill the rest of the diamond.
            for (a, b) in [(p, q), (q, p), (n - p, n - q), (n - q, n - p)] {
                h[a][b] = v;
            }
        }
        HodgeDiamond { n, family, h }
    }

    pub fn betti_sum(&self) -> BigInt {
        self.h.iter().flatten().map(|&v| BigInt::from(v)).sum()
    }

    pub fn euler(&self) -> BigInt {
        let mut acc = BigInt::zero();
        for (p, row) in self.h.iter().enumerate() {
            for (q, &v) in row.iter().enumerate() {
                if (p + q) % 2 == 0 {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
        }
        acc
    }

    pub fn betti(&self, k: usize) -> u64 {
        (0..=self.n).filter(|&p| k >= p && k - p <= self.n).map(|p| self.h[p][k - p]).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n;
        (0..=n).all(|p| (0..=n).all(|q| self.h[p][q] == self.h[q][p] && self.h[p][q] == self.h[n - p][n - q]))
    }

    /// The diamond as centred rows, top row `h^{0,0}`.
    pub fn render(&self) -> String {
        let n = self.n;
        let rows: Vec<Vec<String>> = (0..=2 * n)
            .map(|k| {
                (0..=n)
                    .rev()
                    .filter(|&p| k >= p && k - p <= n)
                    .map(|p| self.h[p][k - p].to_string())
                    .collect()
            })
            .collect();
        let width = rows.iter().flatten().map(String::len).max().unwrap_or(1);
        let mut out = String::new();
        for row in &rows {
            let pad = (n + 1 - row.len()) * (width + 1) / 2 + (n + 1 - row.len()) * (width + 1) % 2;
            let cells: Vec<String> = row.iter().map(|c| format!("{c:^width$}")).collect();
            let _ = writeln!(out, "{}{}", " ".repeat(pad), cells.join(" ").trim_end());
        }
        out
    }
}

/// Tabulated Hodge diamonds for `n` in {3, 4}.
pub fn hodge_diamond(n: usize, i: u8) -> Result<HodgeDiamond> {
    check_family(i)?;
    let entries: &[((usize, usize), u64)] = match (n, i) {
        (3, 1) => &[((0, 0), 1), ((1, 1), 11), ((3, 0), 1), ((2, 1), 491)],
        (3, 2) => &[((0, 0), 1), ((1, 1), 251), ((3, 0), 1), ((2, 1), 251)],
        (4, 1) => &[((0, 0), 1), ((1, 1), 252), ((4, 0), 1), ((3, 1), 303148), ((2, 2), 1213644)],
        (4, 2) => &[((0, 0), 1), ((1, 1), 151700), ((4, 0), 1), ((3, 1), 151700), ((2, 2), 1213644)],
        _ => {
            return Err(Error::NotTabulated(format!(
                "Hodge diamonds are tabulated for n = 3 and 4 only, not n = {n}"
            )))
        }
    };
    Ok(HodgeDiamond::from_unique(n, i, entries))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InvariantRow {
    pub n: usize,
    #[serde(serialize_with = "serialize_bigint")]
    pub index: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub betti_sum: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub euler_1: BigInt,
    #[serde(serialize_with = "serialize_bigint")]
    pub euler_2: BigInt,
}

pub fn invariant_table(n_max: usize) -> Result<Vec<InvariantRow>> {
    check_n(n_max)?;
    (1..=n_max)
        .map(|n| {
            Ok(InvariantRow {
                n,
                index: index_formula(n)?,
                betti_sum: betti_sum(n)?,
                euler_1: euler(n, 1)?,
                euler_2: euler(n, 2)?,
            })
        })
        .collect()
}

const TABLE_HEADER: [&str; 5] = ["n", "index", "betti_sum", "euler_1", "euler_2"];

fn row_fields(r: &InvariantRow) -> [String; 5] {
    [
        r.n.to_string(),
        r.index.to_string(),
        r.betti_sum.to_string(),
        r.euler_1.to_string(),
        r.euler_2.to_string(),
    ]
}

pub fn render_csv(rows: &[InvariantRow]) -> String {
    let mut out = TABLE_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&row_fields(r).join(","));
        out.push('\n');
    }
    out
}

/// Right-aligned columns separated by two spaces.
pub fn render_text(rows: &[InvariantRow]) -> String {
    let fields: Vec<[String; 5]> = rows.iter().map(row_fields).collect();
    let widths: Vec<usize> = (0..5)
        .map(|k| fields.iter().map(|f| f[k].len()).chain([TABLE_HEADER[k].len()]).max().unwrap())
        .collect();
    let line = |cols: &[&str]| -> String {
        cols.iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(&TABLE_HEADER);
    out.push('\n');
    for f in &fields {
        let cols: Vec<&str> = f.iter().map(String::as_str).collect();
        out.push_str(&line(&cols));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(index_formula(2).unwrap(), BigInt::from(6));
        assert_eq!(betti_sum(1).unwrap(), BigInt::from(4));
        assert_eq!(euler(1, 1).unwrap(), BigInt::zero());
        assert_eq!(middle_betti(3, 2).unwrap(), Some(BigInt::from(504)));
        assert_eq!(middle_betti(4, 1).unwrap(), None);
        assert!(matches!(hodge_diamond(5, 1), Err(Error::NotTabulated(_))));
        assert!(index_formula(0).is_err());
    }

    #[test]
    fn diamonds_are_symmetric_with_unit_corners() {
        for (n, i) in [(3, 1), (3, 2), (4, 1), (4, 2)] {
            let h = hodge_diamond(n, i).unwrap();
            assert!(h.is_symmetric());
            assert_eq!(h.h[0][0], 1);
            assert_eq!(h.h[n][0], 1);
            assert_eq!(h.h[1][0], 0);
        }
    }

    #[test]
    fn text_table_is_aligned() {
        let t = render_text(&invariant_table(3).unwrap());
        let lens: Vec<usize> = t.lines().map(str::len).collect();
        assert!(lens.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(render_csv(&invariant_table(1).unwrap()), "n,index,betti_sum,euler_1,euler_2\n1,1,4,0,0\n");
    }

    #[test]
    fn segment_face_fan() {
        let s = Subdivision::from_point_cells(
            &[LatticePoint::new(vec![-1]), LatticePoint::new(vec![1])],
            &[vec![LatticePoint::new(vec![-1]), LatticePoint::new(vec![1])]],
            &[],
        )
        .unwrap();
        let f = fan_from_triangulation(&s).unwrap();
        assert_eq!(f.cones, vec![vec![0], vec![1]]);
        assert!(f.flags.complete && f.flags.smooth && f.flags.crepant);
    }
}
