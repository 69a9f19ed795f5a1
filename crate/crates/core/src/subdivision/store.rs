use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::LatticePoint;

/// Deduplicated, lexicographically sorted lattice points with an index.
#[derive(Clone, Debug, Default)]
pub struct PointStore {
    points: Vec<LatticePoint>,
    index: HashMap<LatticePoint, u32>,
}

impl PartialEq for PointStore {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl Eq for PointStore {}

impl PointStore {
    pub fn new(mut points: Vec<LatticePoint>) -> Result<Self> {
        points.sort();
        points.dedup();
        Self::from_sorted(points)
    }

    /// Builds from points that are already sorted and distinct.
    pub fn from_sorted(points: Vec<LatticePoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.dim();
            if points.iter().any(|p| p.dim() != d) {
                return Err(Error::dim("store points of different dimensions"));
            }
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument("store points must be sorted and distinct".into()));
        }
        if points.len() > u32::MAX as usize {
            return Err(Error::Argument("too many points for a store".into()));
        }
        let index = points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32))
            .collect();
        Ok(PointStore { points, index })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Dimension of the stored points (0 for an empty store).
    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, LatticePoint::dim)
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn get(&self, i: u32) -> &LatticePoint {
        &self.points[i as usize]
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<u32> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.index.contains_key(p)
    }

    /// Union of two stores with the index maps from each input into it.
    pub fn union(&self, other: &PointStore) -> Result<(PointStore, Vec<u32>, Vec<u32>)> {
        let mut all = self.points.clone();
        all.extend(other.points.iter().cloned());
        let merged = PointStore::new(all)?;
        let a = self.points.iter().map(|p| merged.index[p]).collect();
        let b = other.points.iter().map(|p| merged.index[p]).collect();
        Ok((merged, a, b))
    }
}
