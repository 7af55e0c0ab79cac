//! Uniform Cartesian grids on the lattice `h·Z^N`.
//!
//! Grids are always aligned to the global lattice, so two grids with the same
//! spacing share node positions. This is what lets solutions on nested domains
//! be compared node by node.

use serde::Serialize;

pub type Point = [f64; 2];

/// A grid of `extents[0] × extents[1]` nodes (`extents[1] == 1` in 1D) with an
/// interior mask. Node `k = i + extents[0]·j` sits at `((offset[0]+i)·h, (offset[1]+j)·h)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    dim: usize,
    h: f64,
    offset: [i64; 2],
    extents: [usize; 2],
    mask: Vec<bool>,
    /// Inradius of the domain the grid was built from.
    length_scale: f64,
    #[serde(skip)]
    interior: Vec<usize>,
    #[serde(skip)]
    slot: Vec<usize>,
}

pub(crate) const NO_SLOT: usize = usize::MAX;

impl Grid {
    pub(crate) fn from_mask(
        dim: usize,
        h: f64,
        offset: [i64; 2],
        extents: [usize; 2],
        mask: Vec<bool>,
        length_scale: f64,
    ) -> Self {
        debug_assert_eq!(mask.len(), extents[0] * extents[1]);
        let interior: Vec<usize> = (0..mask.len()).filter(|&k| mask[k]).collect();
        let mut slot = vec![NO_SLOT; mask.len()];
        for (s, &k) in interior.iter().enumerate() {
            slot[k] = s;
        }
        Grid {
            dim,
            h,
            offset,
            extents,
            mask,
            length_scale,
            interior,
            slot,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Inradius of the source domain; sets the scale of the regularization.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn extents(&self) -> [usize; 2] {
        self.extents
    }

    pub fn origin(&self) -> Point {
        [self.offset[0] as f64 * self.h, self.offset[1] as f64 * self.h]
    }

    pub fn node_count(&self) -> usize {
        self.mask.len()
    }

    /// `h^N`, the volume attached to one node.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.mask[k]
    }

    /// Interior node indices in increasing (row-major) order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    /// Position of node `k` among the interior nodes.
    pub fn slot(&self, k: usize) -> Option<usize> {
        match self.slot[k] {
            NO_SLOT => None,
            s => Some(s),
        }
    }

    pub(crate) fn slots(&self) -> &[usize] {
        &self.slot
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.extents[0] * j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.extents[0], k / self.extents[0])
    }

    /// Integer lattice coordinates of node `k`.
    pub fn lattice(&self, k: usize) -> [i64; 2] {
        let (i, j) = self.ij(k);
        [self.offset[0] + i as i64, self.offset[1] + j as i64]
    }

    pub fn node_at_lattice(&self, l: [i64; 2]) -> Option<usize> {
        let i = l[0] - self.offset[0];
        let j = l[1] - self.offset[1];
        if i < 0 || j < 0 || i as usize >= self.extents[0] || j as usize >= self.extents[1] {
            return None;
        }
        Some(self.index(i as usize, j as usize))
    }

    pub fn coords(&self, k: usize) -> Point {
        let l = self.lattice(k);
        [l[0] as f64 * self.h, l[1] as f64 * self.h]
    }

    /// Index of the forward neighbour along `axis`, if it exists.
    pub fn forward(&self, k: usize, axis: usize) -> Option<usize> {
        let (i, j) = self.ij(k);
        match axis {
            0 if i + 1 < self.extents[0] => Some(k + 1),
            1 if self.dim == 2 && j + 1 < self.extents[1] => Some(k + self.extents[0]),
            _ => None,
        }
    }

    /// Index of the backward neighbour along `axis`, if it exists.
    pub fn backward(&self, k: usize, axis: usize) -> Option<usize> {
        let (i, j) = self.ij(k);
        match axis {
            0 if i > 0 => Some(k - 1),
            1 if self.dim == 2 && j > 0 => Some(k - self.extents[0]),
            _ => None,
        }
    }

    /// True when node `k` carries a forward-difference cell, i.e. all of its
    /// forward neighbours exist.
    pub fn has_cell(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        i + 1 < self.extents[0] && (self.dim == 1 || j + 1 < self.extents[1])
    }
}
