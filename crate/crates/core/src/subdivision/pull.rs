//! Pulling refinements.
//!
//! [`PullEngine`] keeps the maximal cells of a subdivision together with the
//! not-yet-pulled lattice points each cell contains, so that pulling a point
//! only touches the cells containing it. When a regularity witness is
//! attached, each pull also lowers the witness at the pulled point by a
//! power of two small enough to keep the witness strictly convex.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exact::{BigInt, BigRat};
use crate::geometry::hull::{self, Barycentric, Frame, IntHalfSpace};
use crate::geometry::CellPolytope;
use crate::subdivision::{Subdivision, Triangulation};

type Verts = SmallVec<[u32; 8]>;
type FacetKey = SmallVec<[u32; 6]>;

#[derive(Clone, Debug)]
struct CellFacet {
    ineq: IntHalfSpace,
    /// Bit `j` set when `verts[j]` lies on the facet.
    members: u64,
}

#[derive(Clone, Debug)]
struct LiveCell {
    verts: Verts,
    /// Store points inside the cell that are not among its vertices. All of
    /// them are unpulled: a pulled point is a vertex of every cell containing
    /// it.
    others: Vec<u32>,
    /// Cached facets of non-simplicial cells.
    facets: Option<Vec<CellFacet>>,
}

/// Record of one pull: the point and, with a witness attached, the amount
/// its value was lowered by.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct PullStep {
    pub point: u32,
    pub epsilon: Option<BigRat>,
}

/// A piece produced while pulling: the new cell and the facet of the old
/// cell it was coned over (`None` when the old cell is kept as is).
struct Piece {
    id: u32,
    old: usize,
    base: IntHalfSpace,
}

pub(crate) struct PullEngine {
    proj: Vec<Vec<i64>>,
    d: usize,
    cells: Vec<Option<LiveCell>>,
    free: Vec<u32>,
    inc: Vec<Vec<u32>>,
    pulled: Vec<bool>,
    witness: Option<Vec<BigRat>>,
    facet_map: HashMap<FacetKey, SmallVec<[u32; 2]>>,
    source: Subdivision,
}

/// `num / den + eps * a / gm > 0` with `den, gm > 0`.
struct Constraint {
    num: BigInt,
    den: BigInt,
    a: i128,
    gm: i128,
}

impl Constraint {
    /// Smallest `k >= 0` such that `eps = 2^-k` satisfies the constraint.
    fn halvings(&self) -> u64 {
        if self.a >= 0 {
            return 0;
        }
        // need num * gm * 2^k > den * (-a)
        let lhs = &self.num * BigInt::from(self.gm);
        let rhs = &self.den * BigInt::from(-self.a);
        let mut k = rhs.bits().saturating_sub(lhs.bits());
        while (&lhs << k) <= rhs {
            k += 1;
        }
        k
    }

    fn holds(&self, eps: &BigRat) -> bool {
        let lhs = &self.num * BigInt::from(self.gm) * eps.denom();
        let rhs = &self.den * BigInt::from(self.a) * eps.numer();
        (lhs + rhs).is_positive()
    }
}

impl PullEngine {
    pub fn new(s: &Subdivision, witness: Option<Vec<BigRat>>) -> Result<Self> {
        if let Some(w) = &witness {
            if w.len() != s.store().len() {
                return Err(Error::Argument("witness length differs from the store size".into()));
            }
        }
        let frame = {
            let refs: Vec<&[i64]> = s.ambient().iter().map(|p| p.coords()).collect();
            Frame::of(&refs)
        };
        let proj: Vec<Vec<i64>> = s.store().points().iter().map(|p| frame.project(p)).collect();
        let npts = proj.len();
        let mut engine = PullEngine {
            d: s.dim(),
            cells: Vec::with_capacity(s.num_cells()),
            free: Vec::new(),
            inc: vec![Vec::new(); npts],
            pulled: vec![false; npts],
            facet_map: HashMap::new(),
            witness,
            proj,
            source: s.clone(),
        };
        let in_hull: Vec<bool> = if frame.is_full() {
            vec![true; npts]
        } else {
            s.store().points().iter().map(|p| frame.contains_affinely(p)).collect()
        };
        for c in s.cells() {
            let refs: Vec<&[i64]> = c.iter().map(|&i| engine.proj[i as usize].as_slice()).collect();
            let verts: Verts = if c.len() == engine.d + 1 {
                c.iter().copied().collect()
            } else {
                hull::vertex_indices(&refs)?.into_iter().map(|j| c[j]).collect()
            };
            let others = engine.points_inside(&verts, &in_hull)?;
            let id = engine.insert(verts, others)?;
            engine.register(id)?;
        }
        Ok(engine)
    }

    /// Store points inside the cell spanned by `verts`, excluding the
    /// vertices themselves.
    fn points_inside(&self, verts: &[u32], in_hull: &[bool]) -> Result<Vec<u32>> {
        let d = self.d;
        let lo: Vec<i64> = (0..d).map(|j| verts.iter().map(|&v| self.proj[v as usize][j]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..d).map(|j| verts.iter().map(|&v| self.proj[v as usize][j]).max().unwrap()).collect();
        let facets = self.facets_of(verts)?;
        let mut out = Vec::new();
        for (i, p) in self.proj.iter().enumerate() {
            if !in_hull[i] || (0..d).any(|j| p[j] < lo[j] || p[j] > hi[j]) {
                continue;
            }
            if verts.contains(&(i as u32)) {
                continue;
            }
            if facets.iter().all(|f| f.ineq.eval(p) >= 0) {
                out.push(i as u32);
            }
        }
        Ok(out)
    }

    fn facets_of(&self, verts: &[u32]) -> Result<Vec<CellFacet>> {
        let refs: Vec<&[i64]> = verts.iter().map(|&v| self.proj[v as usize].as_slice()).collect();
        if verts.len() == self.d + 1 {
            let b = Barycentric::new(&refs)?
                .ok_or_else(|| Error::Degenerate("simplicial cell of zero volume".into()))?;
            let all = (1u64 << verts.len()) - 1;
            (0..verts.len())
                .map(|i| Ok(CellFacet { ineq: b.facet(i)?, members: all & !(1 << i) }))
                .collect()
        } else {
            Ok(hull::hull_facets(&refs)?
                .into_iter()
                .map(|f| CellFacet {
                    ineq: f.ineq,
                    members: f.members.iter().fold(0u64, |m, &j| m | 1 << j),
                })
                .collect())
        }
    }

    fn cell_facets(&mut self, id: u32) -> Result<Vec<CellFacet>> {
        let cell = self.cells[id as usize].as_ref().unwrap();
        if let Some(f) = &cell.facets {
            return Ok(f.clone());
        }
        let f = self.facets_of(&cell.verts)?;
        if cell.verts.len() != self.d + 1 {
            self.cells[id as usize].as_mut().unwrap().facets = Some(f.clone());
        }
        Ok(f)
    }

    fn insert(&mut self, mut verts: Verts, mut others: Vec<u32>) -> Result<u32> {
        verts.sort_unstable();
        if verts.len() > 64 {
            return Err(Error::Argument("cells with more than 64 vertices are not supported".into()));
        }
        others.shrink_to_fit();
        let cell = LiveCell { verts, others, facets: None };
        let id = match self.free.pop() {
            Some(id) => {
                self.cells[id as usize] = Some(cell);
                id
            }
            None => {
                self.cells.push(Some(cell));
                (self.cells.len() - 1) as u32
            }
        };
        let c = self.cells[id as usize].as_ref().unwrap();
        for &p in c.verts.iter().chain(&c.others) {
            if !self.pulled[p as usize] {
                let list = &mut self.inc[p as usize];
                list.push(id);
                // Removed cells leave stale ids behind; compact on each doubling.
                if list.len() >= 64 && list.len().is_power_of_two() {
                    let cells = &self.cells;
                    list.retain(|&i| {
                        cells[i as usize]
                            .as_ref()
                            .is_some_and(|c| c.verts.contains(&p) || c.others.contains(&p))
                    });
                    list.sort_unstable();
                    list.dedup();
                    list.shrink_to(list.len() * 2);
                }
            }
        }
        Ok(id)
    }

    fn facet_keys(&mut self, id: u32) -> Result<Vec<FacetKey>> {
        let verts = self.cells[id as usize].as_ref().unwrap().verts.clone();
        if verts.len() == self.d + 1 {
            return Ok((0..verts.len())
                .map(|i| verts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect())
                .collect());
        }
        Ok(self
            .cell_facets(id)?
            .iter()
            .map(|f| (0..verts.len()).filter(|&j| f.members >> j & 1 == 1).map(|j| verts[j]).collect())
            .collect())
    }

    fn register(&mut self, id: u32) -> Result<()> {
        if self.witness.is_none() {
            return Ok(());
        }
        for k in self.facet_keys(id)? {
            self.facet_map.entry(k).or_default().push(id);
        }
        Ok(())
    }

    fn unregister(&mut self, id: u32) -> Result<()> {
        if self.witness.is_none() {
            return Ok(());
        }
        for k in self.facet_keys(id)? {
            if let Some(v) = self.facet_map.get_mut(&k) {
                v.retain(|x| *x != id);
                if v.is_empty() {
                    self.facet_map.remove(&k);
                }
            }
        }
        Ok(())
    }

    fn remove(&mut self, id: u32) -> Result<LiveCell> {
        self.unregister(id)?;
        let cell = self.cells[id as usize].take().unwrap();
        self.free.push(id);
        Ok(cell)
    }

    fn cells_containing(&self, m: u32) -> Vec<u32> {
        let mut ids: Vec<u32> = self.inc[m as usize]
            .iter()
            .copied()
            .filter(|&id| {
                self.cells[id as usize]
                    .as_ref()
                    .is_some_and(|c| c.verts.contains(&m) || c.others.contains(&m))
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Affine function of the witness on a cell, evaluated through the
    /// barycentric coordinates of an affinely independent vertex subset.
    fn affine_on(&self, verts: &[u32]) -> Result<(Barycentric, Verts)> {
        let basis: Verts = if verts.len() == self.d + 1 {
            verts.iter().copied().collect()
        } else {
            let mut chosen: Verts = SmallVec::new();
            for &v in verts {
                chosen.push(v);
                let refs: Vec<&[i64]> = chosen.iter().map(|&c| self.proj[c as usize].as_slice()).collect();
                if hull::affine_rank_int(&refs) + 1 != chosen.len() {
                    chosen.pop();
                }
                if chosen.len() == self.d + 1 {
                    break;
                }
            }
            chosen
        };
        let refs: Vec<&[i64]> = basis.iter().map(|&c| self.proj[c as usize].as_slice()).collect();
        let b = Barycentric::new(&refs)?
            .ok_or_else(|| Error::Degenerate("cell without an affine basis".into()))?;
        Ok((b, basis))
    }

    /// The affine interpolant of the witness on `aff` at `p`, as an
    /// unreduced fraction with positive denominator.
    fn eval_affine(&self, aff: &(Barycentric, Verts), p: u32) -> (BigInt, BigInt) {
        let w = self.witness.as_ref().unwrap();
        let (b, basis) = aff;
        let x = &self.proj[p as usize];
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for (i, &v) in basis.iter().enumerate() {
            let lam = b.scaled(i, x);
            if lam == 0 {
                continue;
            }
            let wv = &w[v as usize];
            let term = wv.numer() * BigInt::from(lam);
            if wv.denom() == &den {
                num += term;
            } else {
                num = num * wv.denom() + term * &den;
                den *= wv.denom();
            }
        }
        den *= BigInt::from(b.det);
        if den.is_negative() {
            (-num, -den)
        } else {
            (num, den)
        }
    }

    /// Pulls the subdivision at `m`. With a witness attached, `epsilon`
    /// overrides the computed decrement (it is still checked); the decrement
    /// used is returned.
    pub fn pull(&mut self, m: u32, epsilon: Option<&BigRat>) -> Result<PullStep> {
        let mi = m as usize;
        if self.pulled[mi] {
            return Ok(PullStep { point: m, epsilon: None });
        }
        let containing = self.cells_containing(m);
        if containing.is_empty() {
            return Err(Error::Domain(format!(
                "point {} lies in no cell of the subdivision",
                self.source.store().get(m)
            )));
        }
        self.pulled[mi] = true;
        self.inc[mi] = Vec::new();

        let tracking = self.witness.is_some();
        let mut olds: Vec<(Barycentric, Verts)> = Vec::new();
        let mut phi_m: Option<BigRat> = None;
        let mut pieces: Vec<Piece> = Vec::new();

        for &id in &containing {
            let cell = self.cells[id as usize].as_ref().unwrap();
            let is_vertex = cell.verts.contains(&m);
            if tracking {
                let aff = self.affine_on(&cell.verts)?;
                if phi_m.is_none() {
                    phi_m = Some(if is_vertex {
                        self.witness.as_ref().unwrap()[mi].clone()
                    } else {
                        let (num, den) = self.eval_affine(&aff, m);
                        BigRat::new(num, den)
                    });
                }
                olds.push(aff);
            }
            let old = olds.len().wrapping_sub(1);
            let simplex_vertex = is_vertex && cell.verts.len() == self.d + 1;
            let pos = cell.verts.iter().position(|&v| v == m);
            let facets = self.cell_facets(id)?;
            let mpt = self.proj[mi].clone();
            if simplex_vertex {
                let pos = pos.unwrap();
                let base = facets.iter().find(|f| f.members >> pos & 1 == 0).unwrap().ineq.clone();
                pieces.push(Piece { id, old, base });
                continue;
            }
            let cell = self.remove(id)?;
            let cand: Vec<&CellFacet> = facets.iter().filter(|f| f.ineq.eval(&mpt) > 0).collect();
            let gm: Vec<i128> = cand.iter().map(|f| f.ineq.eval(&mpt)).collect();
            let mut piece_others: Vec<Vec<u32>> = vec![Vec::new(); cand.len()];
            for &p in &cell.others {
                if p == m {
                    continue;
                }
                let x = &self.proj[p as usize];
                // exit ratio gm / (gm - gp), minimized over facets
                let mut best: Option<(i128, i128)> = None;
                let mut hits: SmallVec<[usize; 4]> = SmallVec::new();
                for (k, f) in cand.iter().enumerate() {
                    let gp = f.ineq.eval(x);
                    if gp >= gm[k] {
                        continue;
                    }
                    let (num, den) = (gm[k], gm[k] - gp);
                    match best {
                        None => {
                            best = Some((num, den));
                            hits = SmallVec::from_slice(&[k]);
                        }
                        Some((bn, bd)) => {
                            let lhs = num.checked_mul(bd).ok_or(Error::Overflow("pulling ratio"))?;
                            let rhs = bn.checked_mul(den).ok_or(Error::Overflow("pulling ratio"))?;
                            if lhs < rhs {
                                best = Some((num, den));
                                hits = SmallVec::from_slice(&[k]);
                            } else if lhs == rhs {
                                hits.push(k);
                            }
                        }
                    }
                }
                for k in hits {
                    piece_others[k].push(p);
                }
            }
            for (k, f) in cand.iter().enumerate() {
                let mut verts: Verts = (0..cell.verts.len())
                    .filter(|&j| f.members >> j & 1 == 1)
                    .map(|j| cell.verts[j])
                    .collect();
                verts.push(m);
                let others = std::mem::take(&mut piece_others[k]);
                let pid = self.insert(verts, others)?;
                self.register(pid)?;
                pieces.push(Piece { id: pid, old, base: f.ineq.clone() });
            }
        }

        if !tracking {
            return Ok(PullStep { point: m, epsilon: None });
        }
        let phi_m = phi_m.unwrap();
        let mpt = self.proj[mi].clone();
        // constraints g0 + eps * a / gm > 0 across every facet of every
        // piece, with g0 = num / den kept unreduced and den, gm > 0
        let mut checks: Vec<Constraint> = Vec::new();
        for piece in &pieces {
            let keys = self.facet_keys(piece.id)?;
            let gm = piece.base.eval(&mpt);
            if gm <= 0 {
                return Err(Error::Invariant("pulled point on a piece's base facet".into()));
            }
            for key in keys {
                let Some(nb) = self
                    .facet_map
                    .get(&key)
                    .and_then(|ids| ids.iter().copied().find(|&x| x != piece.id))
                else {
                    continue;
                };
                let other = self.cells[nb as usize].as_ref().unwrap();
                let dpt = *other.verts.iter().find(|v| !key.contains(v)).unwrap();
                let (inum, iden) = self.eval_affine(&olds[piece.old], dpt);
                let wd = &self.witness.as_ref().unwrap()[dpt as usize];
                let num = wd.numer() * &iden - inum * wd.denom();
                let den = iden * wd.denom();
                let a = piece.base.eval(&self.proj[dpt as usize]);
                if num.is_negative() || (num.is_zero() && a <= 0) {
                    return Err(Error::Invariant(format!(
                        "witness is not strictly convex around {}",
                        self.source.store().get(m)
                    )));
                }
                checks.push(Constraint { num, den, a, gm });
            }
        }
        let eps = match epsilon {
            Some(e) => e.clone(),
            None => {
                let k = checks.iter().map(Constraint::halvings).max().unwrap_or(0);
                BigRat::new(BigInt::one(), BigInt::one() << k)
            }
        };
        if !eps.is_positive() || !checks.iter().all(|c| c.holds(&eps)) {
            return Err(Error::Verification(format!(
                "decrement {} at {} breaks strict convexity",
                crate::exact::format_rat(&eps),
                self.source.store().get(m)
            )));
        }
        self.witness.as_mut().unwrap()[mi] = phi_m - &eps;
        Ok(PullStep { point: m, epsilon: Some(eps) })
    }

    #[cfg(test)]
    pub fn witness(&self) -> Option<&[BigRat]> {
        self.witness.as_deref()
    }

    pub fn into_parts(self) -> Result<(Subdivision, Option<Vec<BigRat>>)> {
        let cells: Vec<Vec<u32>> = self
            .cells
            .into_iter()
            .flatten()
            .map(|c| c.verts.into_vec())
            .collect();
        let (store, ambient, _) = self.source.into_parts();
        Ok((Subdivision::new(store, &ambient, cells)?, self.witness))
    }
}

/// Pulling refinement of `s` at store point `m`.
pub fn pull(s: &Subdivision, m: u32) -> Result<Subdivision> {
    if m as usize >= s.store().len() {
        return Err(Error::Argument("pulled point is not in the store".into()));
    }
    let mut e = PullEngine::new(s, None)?;
    e.pull(m, None)?;
    Ok(e.into_parts()?.0)
}

/// Pulls `s` at every store point in lexicographic order. The result is a
/// triangulation using every store point.
pub fn pull_all(s: &Subdivision) -> Result<Triangulation> {
    let mut e = PullEngine::new(s, None)?;
    for m in 0..s.store().len() as u32 {
        e.pull(m, None)?;
    }
    Triangulation::new(e.into_parts()?.0)
}

/// Pulling refinement computed straight from the definition: every face
/// containing `m` is replaced by the cones from `m` over its faces avoiding
/// `m`, and the maximal members of the resulting complex are returned.
pub fn pull_literal(s: &Subdivision, m: u32) -> Result<Subdivision> {
    let store = s.store();
    let mpt = store.get(m).clone();
    let mrat = mpt.to_rational();
    let mut candidates: Vec<CellPolytope> = Vec::new();
    for i in 0..s.num_cells() {
        let cell = CellPolytope::from_points(&s.cell_points(i))?;
        if cell.contains(&mrat)? == crate::geometry::Membership::Outside {
            candidates.push(cell);
            continue;
        }
        let mut faces = cell.faces()?;
        faces.push(cell);
        for f in &faces {
            if f.contains(&mrat)? == crate::geometry::Membership::Outside {
                continue;
            }
            let mut sub = f.faces()?;
            sub.push(f.clone());
            for g in sub {
                if g.contains(&mrat)? != crate::geometry::Membership::Outside {
                    continue;
                }
                let mut pts = g.vertices().to_vec();
                pts.push(mpt.clone());
                candidates.push(CellPolytope::from_points(&pts)?);
            }
        }
    }
    let mut maximal: Vec<CellPolytope> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if c.dim() != s.dim() {
            continue;
        }
        let mut dominated = false;
        for (j, other) in candidates.iter().enumerate() {
            if i == j || other.dim() != s.dim() {
                continue;
            }
            let inside = c.vertices().iter().all(|v| {
                other
                    .contains(&v.to_rational())
                    .is_ok_and(|r| r != crate::geometry::Membership::Outside)
            });
            if inside && (c.vertices() != other.vertices() || j < i) {
                dominated = true;
                break;
            }
        }
        if !dominated {
            maximal.push(c.clone());
        }
    }
    let cells = maximal
        .iter()
        .map(|c| {
            c.vertices()
                .iter()
                .map(|v| store.index_of(v).ok_or_else(|| Error::Invariant("face vertex not in store".into())))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Subdivision::new(store.clone(), s.ambient(), cells)
}
