//! Subdivisions of lattice polytopes stored as maximal cells over a shared
//! point store, and the constructions that combine them.

mod pull;
mod store;
mod verify;

use std::collections::BTreeSet;

pub use pull::{pull, pull_all, pull_literal};
pub(crate) use pull::PullEngine;
pub use store::PointStore;
pub(crate) use verify::shared_simplex_facets;
pub use verify::{verify, verify_with, PairwiseCheck, VerifyOptions, VerifyReport};

use crate::error::{Error, Result};
use crate::exact::{det_i64, BigInt};
use crate::geometry::hull::{self, IntHalfSpace};
use crate::geometry::{apply_affine, CellPolytope, LatticePoint};

/// A polytopal subdivision: maximal cells as sorted index sets into a point
/// store. The store may contain points that are not vertices of any cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subdivision {
    store: PointStore,
    ambient: Vec<LatticePoint>,
    dim: usize,
    offsets: Vec<usize>,
    data: Vec<u32>,
}

impl Subdivision {
    /// Builds a subdivision of the polytope spanned by `ambient`. Cells are
    /// canonicalized: indices sorted within each cell, cells sorted and
    /// deduplicated.
    pub fn new<I>(store: PointStore, ambient: &[LatticePoint], cells: I) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u32>>,
    {
        let poly = CellPolytope::from_points(ambient)?;
        if poly.ambient_dim() != store.dim() {
            return Err(Error::dim("ambient polytope and store dimensions differ"));
        }
        let dim = poly.dim();
        let mut cells: Vec<Vec<u32>> = cells
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        for c in &cells {
            if c.iter().any(|&i| i as usize >= store.len()) {
                return Err(Error::Argument("cell index outside the point store".into()));
            }
            if c.len() < dim + 1 {
                return Err(Error::Degenerate(format!(
                    "cell with {} points cannot span dimension {dim}",
                    c.len()
                )));
            }
        }
        cells.sort_unstable();
        cells.dedup();
        Ok(Self::from_canonical(store, poly.vertices().to_vec(), dim, cells))
    }

    fn from_canonical(
        store: PointStore,
        ambient: Vec<LatticePoint>,
        dim: usize,
        cells: Vec<Vec<u32>>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(cells.len() + 1);
        let mut data = Vec::with_capacity(cells.iter().map(Vec::len).sum());
        offsets.push(0);
        for c in cells {
            data.extend_from_slice(&c);
            offsets.push(data.len());
        }
        Subdivision {
            store,
            ambient,
            dim,
            offsets,
            data,
        }
    }

    /// The subdivision consisting of the polytope itself.
    pub fn trivial(store: PointStore, ambient: &[LatticePoint]) -> Result<Self> {
        let poly = CellPolytope::from_points(ambient)?;
        let cell = poly
            .vertices()
            .iter()
            .map(|v| {
                store
                    .index_of(v)
                    .ok_or_else(|| Error::Argument(format!("vertex {v} missing from store")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(store, ambient, [cell])
    }

    /// Convenience constructor from explicit point lists per cell. The store
    /// is the union of `extra` and all cell points.
    pub fn from_point_cells(
        ambient: &[LatticePoint],
        cells: &[Vec<LatticePoint>],
        extra: &[LatticePoint],
    ) -> Result<Self> {
        let mut pts: Vec<LatticePoint> = extra.to_vec();
        pts.extend(cells.iter().flatten().cloned());
        pts.extend(ambient.iter().cloned());
        let store = PointStore::new(pts)?;
        let idx: Vec<Vec<u32>> = cells
            .iter()
            .map(|c| c.iter().map(|p| store.index_of(p).unwrap()).collect())
            .collect();
        Self::new(store, ambient, idx)
    }

    pub fn store(&self) -> &PointStore {
        &self.store
    }

    /// Vertices of the subdivided polytope, sorted.
    pub fn ambient(&self) -> &[LatticePoint] {
        &self.ambient
    }

    pub fn ambient_polytope(&self) -> CellPolytope {
        CellPolytope::from_vertices_unchecked(self.ambient.clone(), self.dim)
    }

    /// Dimension of the subdivided polytope.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the space the points live in.
    pub fn ambient_dim(&self) -> usize {
        self.store.dim()
    }

    pub fn num_cells(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn cell(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.num_cells()).map(move |i| self.cell(i))
    }

    pub fn cell_points(&self, i: usize) -> Vec<LatticePoint> {
        self.cell(i).iter().map(|&j| self.store.get(j).clone()).collect()
    }

    pub fn is_simplicial(&self) -> bool {
        self.cells().all(|c| c.len() == self.dim + 1)
    }

    /// Cells as sets of points, for comparisons across different stores.
    pub fn cell_point_sets(&self) -> BTreeSet<Vec<LatticePoint>> {
        (0..self.num_cells()).map(|i| self.cell_points(i)).collect()
    }

    /// Indices of store points that are used by some cell.
    pub fn used_points(&self) -> Vec<u32> {
        let mut used = vec![false; self.store.len()];
        for &i in &self.data {
            used[i as usize] = true;
        }
        (0..self.store.len() as u32).filter(|&i| used[i as usize]).collect()
    }

    /// Normalized volume of cell `i` relative to the subdivision's affine hull.
    pub fn cell_nvol(&self, i: usize) -> Result<BigInt> {
        let pts: Vec<&[i64]> = self.cell(i).iter().map(|&j| self.store.get(j).coords()).collect();
        if pts.len() == self.dim + 1 {
            hull::simplex_relative_nvol(&pts)
        } else {
            hull::polytope_relative_nvol(&pts)
        }
    }

    pub fn ambient_nvol(&self) -> Result<BigInt> {
        let pts: Vec<&[i64]> = self.ambient.iter().map(|p| p.coords()).collect();
        hull::polytope_relative_nvol(&pts)
    }

    /// Same subdivision with the last coordinate of every point removed.
    /// Fails unless the projection is injective on the store.
    pub fn drop_last_coordinate(&self) -> Result<Subdivision> {
        let pts: Vec<LatticePoint> = self.store.points().iter().map(LatticePoint::project).collect();
        let store = PointStore::new(pts.clone())?;
        if store.len() != pts.len() {
            return Err(Error::NotCompatible("projection is not injective on the store".into()));
        }
        let map: Vec<u32> = pts.iter().map(|p| store.index_of(p).unwrap()).collect();
        let ambient: Vec<LatticePoint> = self.ambient.iter().map(LatticePoint::project).collect();
        let cells = self
            .cells()
            .map(|c| c.iter().map(|&i| map[i as usize]).collect())
            .collect::<Vec<_>>();
        Subdivision::new(store, &ambient, cells)
    }

    /// Same subdivision with `value` appended to every point.
    pub fn embed(&self, value: i64) -> Result<Subdivision> {
        let store = PointStore::from_sorted(self.store.points().iter().map(|p| p.lift(value)).collect())?;
        let ambient: Vec<LatticePoint> = self.ambient.iter().map(|p| p.lift(value)).collect();
        Ok(Subdivision {
            store,
            ambient,
            dim: self.dim,
            offsets: self.offsets.clone(),
            data: self.data.clone(),
        })
    }

    pub(crate) fn into_parts(self) -> (PointStore, Vec<LatticePoint>, Vec<Vec<u32>>) {
        let cells = (0..self.num_cells()).map(|i| self.cell(i).to_vec()).collect();
        (self.store, self.ambient, cells)
    }
}

/// A subdivision all of whose cells are simplices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation(Subdivision);

impl Triangulation {
    pub fn new(s: Subdivision) -> Result<Self> {
        if !s.is_simplicial() {
            return Err(Error::Invariant("subdivision has non-simplicial cells".into()));
        }
        Ok(Triangulation(s))
    }

    pub fn subdivision(&self) -> &Subdivision {
        &self.0
    }

    pub fn into_subdivision(self) -> Subdivision {
        self.0
    }
}

impl std::ops::Deref for Triangulation {
    type Target = Subdivision;
    fn deref(&self) -> &Subdivision {
        &self.0
    }
}

impl TryFrom<Subdivision> for Triangulation {
    type Error = Error;
    fn try_from(s: Subdivision) -> Result<Self> {
        Triangulation::new(s)
    }
}

/// `Cone(z, S)`: pyramids with apex `z` over the cells of a subdivision that
/// lies in a hyperplane avoiding `z`.
pub fn cone_subdivision(z: &LatticePoint, s: &Subdivision) -> Result<Subdivision> {
    if z.dim() != s.ambient_dim() {
        return Err(Error::dim("apex and subdivision dimensions differ"));
    }
    if s.dim() + 1 != s.ambient_dim() {
        return Err(Error::Degenerate(
            "cone base must span a hyperplane of the ambient space".into(),
        ));
    }
    let refs: Vec<&[i64]> = s.ambient().iter().map(|p| p.coords()).collect();
    let frame = hull::Frame::of(&refs);
    if frame.contains_affinely(z) {
        return Err(Error::Degenerate(format!("apex {z} lies in the base hyperplane")));
    }
    let (store, map_base, map_z) = s.store().union(&PointStore::new(vec![z.clone()])?)?;
    let zi = map_z[0];
    let mut ambient = s.ambient().to_vec();
    ambient.push(z.clone());
    let cells = s.cells().map(|c| {
        let mut cell: Vec<u32> = c.iter().map(|&i| map_base[i as usize]).collect();
        cell.push(zi);
        cell
    });
    let cells: Vec<Vec<u32>> = cells.collect();
    Subdivision::new(store, &ambient, cells)
}

/// Pulls `s` back along the projection that drops the last coordinate and
/// clips it to the region `bottom <= x_last <= top(y)`. `top` must be the
/// restriction of an affine function with `top >= bottom` on the store; each
/// cell becomes the column between the two graphs, with coinciding vertices
/// merged.
pub fn pullback_restricted<F>(s: &Subdivision, bottom: i64, top: F) -> Result<Subdivision>
where
    F: Fn(&LatticePoint) -> Result<i64>,
{
    if s.dim() != s.ambient_dim() {
        return Err(Error::Degenerate("pullback needs a full-dimensional base".into()));
    }
    let tops = s
        .store()
        .points()
        .iter()
        .map(|y| {
            let t = top(y)?;
            if t < bottom {
                return Err(Error::Invariant(format!(
                    "column over {y} has top {t} below the bottom {bottom}"
                )));
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pts = Vec::new();
    let mut first = Vec::with_capacity(tops.len());
    for (y, &t) in s.store().points().iter().zip(&tops) {
        first.push(pts.len() as u32);
        for h in bottom..=t {
            pts.push(y.lift(h));
        }
    }
    let store = PointStore::from_sorted(pts)?;
    let top_index = |i: u32| first[i as usize] + (tops[i as usize] - bottom) as u32;
    let mut ambient = Vec::new();
    for y in s.ambient() {
        ambient.push(y.lift(bottom));
        ambient.push(y.lift(top(y)?));
    }
    let mut cells = Vec::with_capacity(s.num_cells());
    for c in s.cells() {
        let mut cell: Vec<u32> = c.iter().map(|&i| first[i as usize]).collect();
        cell.extend(c.iter().map(|&i| top_index(i)));
        cells.push(cell);
    }
    Subdivision::new(store, &ambient, cells)
}

/// The subdivision induced on the hyperplane `h = 0`. Every cell must meet the
/// hyperplane in a face of itself.
pub fn restrict_to_hyperplane(s: &Subdivision, h: &IntHalfSpace) -> Result<Subdivision> {
    if h.normal.len() != s.ambient_dim() {
        return Err(Error::dim("hyperplane and subdivision dimensions differ"));
    }
    let vals: Vec<i128> = s.store().points().iter().map(|p| h.eval(p)).collect();
    let on: Vec<u32> = (0..vals.len() as u32).filter(|&i| vals[i as usize] == 0).collect();
    if on.is_empty() {
        return Err(Error::NotCompatible("hyperplane misses the point store".into()));
    }
    let mut remap = vec![u32::MAX; vals.len()];
    for (k, &i) in on.iter().enumerate() {
        remap[i as usize] = k as u32;
    }
    let store = PointStore::from_sorted(on.iter().map(|&i| s.store().get(i).clone()).collect())?;

    let ambient_vals: Vec<i128> = s.ambient().iter().map(|p| h.eval(p)).collect();
    let supporting = ambient_vals.iter().all(|&v| v >= 0) || ambient_vals.iter().all(|&v| v <= 0);
    let ambient: Vec<LatticePoint> = if supporting {
        s.ambient()
            .iter()
            .zip(&ambient_vals)
            .filter(|(_, &v)| v == 0)
            .map(|(p, _)| p.clone())
            .collect()
    } else {
        slice_vertices(s, h)?
    };
    if ambient.is_empty() {
        return Err(Error::NotCompatible("hyperplane misses the polytope".into()));
    }
    let slice = CellPolytope::from_points(&ambient)?;
    let target = slice.dim();
    let mut cells = Vec::new();
    for c in s.cells() {
        let pos = c.iter().any(|&i| vals[i as usize] > 0);
        let neg = c.iter().any(|&i| vals[i as usize] < 0);
        if pos && neg {
            return Err(Error::NotCompatible(
                "a cell crosses the hyperplane".into(),
            ));
        }
        let face: Vec<u32> = c
            .iter()
            .filter(|&&i| vals[i as usize] == 0)
            .map(|&i| remap[i as usize])
            .collect();
        if face.len() < target + 1 {
            continue;
        }
        let refs: Vec<&[i64]> = face.iter().map(|&i| store.get(i).coords()).collect();
        if hull::affine_rank_int(&refs) == target {
            cells.push(face);
        }
    }
    Subdivision::new(store, &ambient, cells)
}

fn slice_vertices(s: &Subdivision, h: &IntHalfSpace) -> Result<Vec<LatticePoint>> {
    let poly = s.ambient_polytope();
    let mut out = Vec::new();
    for v in s.ambient() {
        if h.eval(v) == 0 {
            out.push(v.clone());
        }
    }
    for e in poly.faces()?.into_iter().filter(|f| f.dim() == 1) {
        let (a, b) = (&e.vertices()[0], &e.vertices()[1]);
        let (va, vb) = (h.eval(a), h.eval(b));
        if va.signum() * vb.signum() < 0 {
            // point a + t (b - a) with t = va / (va - vb)
            let den = va - vb;
            let mut p = Vec::with_capacity(a.dim());
            for j in 0..a.dim() {
                let num = a[j] as i128 * den + va * (b[j] as i128 - a[j] as i128);
                if num % den != 0 {
                    return Err(Error::NotCompatible(
                        "hyperplane slices the polytope in a non-lattice polytope".into(),
                    ));
                }
                p.push(i64::try_from(num / den).map_err(|_| Error::Overflow("slice vertex"))?);
            }
            out.push(LatticePoint::new(p));
        }
    }
    Ok(out)
}

fn common_facet(a: &Subdivision, b: &Subdivision) -> Result<IntHalfSpace> {
    let fa = a.ambient_polytope().int_facets()?;
    let fb = b.ambient_polytope().int_facets()?;
    fa.into_iter()
        .find(|f| fb.iter().any(|g| *g == f.negated()))
        .ok_or_else(|| Error::Glue("the polytopes share no facet with opposite sides".into()))
}

/// Glues subdivisions of two polytopes meeting in a common facet on which
/// they induce the same subdivision, and whose union is convex.
pub fn glue(a: &Subdivision, b: &Subdivision) -> Result<Subdivision> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != a.ambient_dim() || b.dim() != b.ambient_dim() {
        return Err(Error::Glue("gluing needs two full-dimensional subdivisions".into()));
    }
    let h = common_facet(a, b)?;
    let ra = restrict_to_hyperplane(a, &h)?;
    let rb = restrict_to_hyperplane(b, &h)?;
    if ra.cell_point_sets() != rb.cell_point_sets() {
        return Err(Error::Glue("the subdivisions differ on the common facet".into()));
    }
    let mut ambient = a.ambient().to_vec();
    ambient.extend(b.ambient().iter().cloned());
    let union = CellPolytope::from_points(&ambient)?;
    let total = a.ambient_nvol()? + b.ambient_nvol()?;
    if union.nvol()? != total {
        return Err(Error::Glue("the union of the two polytopes is not convex".into()));
    }
    let (store, ma, mb) = a.store().union(b.store())?;
    let mut cells: Vec<Vec<u32>> = a
        .cells()
        .map(|c| c.iter().map(|&i| ma[i as usize]).collect())
        .collect();
    cells.extend(b.cells().map(|c| c.iter().map(|&i| mb[i as usize]).collect()));
    Subdivision::new(store, union.vertices(), cells)
}

/// An affine lattice automorphism `x -> M x + t` with `|det M| = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeMap {
    matrix: Vec<Vec<i64>>,
    translation: Vec<i64>,
}

impl LatticeMap {
    pub fn new(matrix: Vec<Vec<i64>>, translation: Vec<i64>) -> Result<Self> {
        let d = matrix.len();
        if matrix.iter().any(|r| r.len() != d) || translation.len() != d {
            return Err(Error::dim("lattice map must be square with matching translation"));
        }
        let det = det_i64(&matrix)?;
        if det != BigInt::from(1) && det != BigInt::from(-1) {
            return Err(Error::Argument(format!(
                "lattice map has determinant {det}, expected +-1"
            )));
        }
        Ok(LatticeMap { matrix, translation })
    }

    pub fn linear(matrix: Vec<Vec<i64>>) -> Result<Self> {
        let d = matrix.len();
        Self::new(matrix, vec![0; d])
    }

    pub fn identity(d: usize) -> Self {
        LatticeMap {
            matrix: (0..d).map(|i| (0..d).map(|j| i64::from(i == j)).collect()).collect(),
            translation: vec![0; d],
        }
    }

    pub fn matrix(&self) -> &[Vec<i64>] {
        &self.matrix
    }

    pub fn apply(&self, p: &LatticePoint) -> Result<LatticePoint> {
        apply_affine(&self.matrix, &self.translation, p)
    }
}

/// Image of a subdivision under a lattice automorphism, together with the
/// map from old to new store indices.
pub fn apply_lattice_map(s: &Subdivision, map: &LatticeMap) -> Result<(Subdivision, Vec<u32>)> {
    if map.matrix.len() != s.ambient_dim() {
        return Err(Error::dim("lattice map and subdivision dimensions differ"));
    }
    let images = s
        .store()
        .points()
        .iter()
        .map(|p| map.apply(p))
        .collect::<Result<Vec<_>>>()?;
    let store = PointStore::new(images.clone())?;
    let perm: Vec<u32> = images.iter().map(|p| store.index_of(p).unwrap()).collect();
    let ambient = s
        .ambient()
        .iter()
        .map(|p| map.apply(p))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<Vec<u32>> = s
        .cells()
        .map(|c| c.iter().map(|&i| perm[i as usize]).collect())
        .collect();
    Ok((Subdivision::new(store, &ambient, cells)?, perm))
}
