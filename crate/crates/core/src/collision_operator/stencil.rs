//! Node ↔ cell stencils for the weak form.
//!
//! Fluxes live on the (N−1)³ cell centres. Each cell has eight gradients of a
//! nodal field, one per corner: the differences along the three edges that
//! meet at that corner. For ψ = 1, ξ, |ξ|²/2 every one of them gives
//! Dψ = 0, eᵢ, ξ_c exactly at the cell centre ξ_c, which is all conservation
//! needs. A single corner gradient has no checkerboard modes in its kernel
//! (unlike central or cell-averaged differences), and the full set of eight
//! is closed under every reflection and permutation of the axes, so the
//! discrete operator keeps the cubic symmetry of the lattice.
//!
//! The ξ_a-component of a corner gradient only depends on the corner's
//! offsets along the two other axes, so there are 4 distinct edge families
//! per axis; `pos(axis, corner)` names them.

use alloc::vec;
use alloc::vec::Vec;

use crate::velocity_space::VelocityGrid;

pub(crate) const CORNERS: usize = 8;
pub(crate) const FAMILIES: usize = 4;

/// Offset (0 or 1) of `corner` along `axis`.
#[inline]
fn bit(corner: usize, axis: usize) -> usize {
    (corner >> (2 - axis)) & 1
}

/// Edge family used by component `axis` of the gradient at `corner`.
#[inline]
pub(crate) fn pos(axis: usize, corner: usize) -> usize {
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    2 * bit(corner, a) + bit(corner, b)
}

pub(crate) struct CellStencil {
    n: usize,
    inv_h: f64,
}

impl CellStencil {
    pub(crate) fn new(grid: &VelocityGrid) -> Self {
        Self { n: grid.n(), inv_h: 1.0 / grid.spacing() }
    }

    pub(crate) fn cells(&self) -> usize {
        (self.n - 1).pow(3)
    }

    #[inline]
    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// (upper, lower) node of the edge along `axis` in family `p` of cell (i, j, k).
    #[inline]
    fn edge(&self, axis: usize, p: usize, i: usize, j: usize, k: usize) -> (usize, usize) {
        let (o1, o2) = (p >> 1, p & 1);
        match axis {
            0 => (self.node(i + 1, j + o1, k + o2), self.node(i, j + o1, k + o2)),
            1 => (self.node(i + o1, j + 1, k + o2), self.node(i + o1, j, k + o2)),
            _ => (self.node(i + o1, j + o2, k + 1), self.node(i + o1, j + o2, k)),
        }
    }

    /// Edge differences along `axis` in family `p`, one per cell.
    pub(crate) fn edge_gradient(&self, g: &[f64], axis: usize, p: usize) -> Vec<f64> {
        let m = self.n - 1;
        let mut out = Vec::with_capacity(self.cells());
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let (hi, lo) = self.edge(axis, p, i, j, k);
                    out.push((g[hi] - g[lo]) * self.inv_h);
                }
            }
        }
        out
    }

    /// All 3 × 4 edge families.
    pub(crate) fn edge_gradients(&self, g: &[f64]) -> [[Vec<f64>; FAMILIES]; 3] {
        core::array::from_fn(|axis| core::array::from_fn(|p| self.edge_gradient(g, axis, p)))
    }

    /// out += Dᵀ j for one edge family.
    pub(crate) fn edge_transpose_add(&self, j: &[f64], axis: usize, p: usize, out: &mut [f64]) {
        let m = self.n - 1;
        let mut c = 0;
        for i in 0..m {
            for jj in 0..m {
                for k in 0..m {
                    let (hi, lo) = self.edge(axis, p, i, jj, k);
                    let v = j[c] * self.inv_h;
                    out[hi] += v;
                    out[lo] -= v;
                    c += 1;
                }
            }
        }
    }

    /// Calls `f(cell, node, axis, value)` for every nonzero entry of the gradient at `corner`.
    pub(crate) fn for_each_entry<F: FnMut(usize, usize, usize, f64)>(&self, corner: usize, mut f: F) {
        let m = self.n - 1;
        let mut c = 0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for axis in 0..3 {
                        let (hi, lo) = self.edge(axis, pos(axis, corner), i, j, k);
                        f(c, hi, axis, self.inv_h);
                        f(c, lo, axis, -self.inv_h);
                    }
                    c += 1;
                }
            }
        }
    }

    /// Mean of the eight corner values of each cell.
    pub(crate) fn average(&self, g: &[f64]) -> Vec<f64> {
        let m = self.n - 1;
        let mut out = vec![0.0; self.cells()];
        let mut c = 0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut s = 0.0;
                    for d in 0..8 {
                        s += g[self.node(i + (d >> 2), j + ((d >> 1) & 1), k + (d & 1))];
                    }
                    out[c] = 0.125 * s;
                    c += 1;
                }
            }
        }
        out
    }

    /// Cell-centre coordinates.
    pub(crate) fn centres(&self, grid: &VelocityGrid) -> Vec<[f64; 3]> {
        let ax = grid.axis();
        let mid: Vec<f64> = (0..self.n - 1).map(|i| 0.5 * (ax[i] + ax[i + 1])).collect();
        let m = self.n - 1;
        let mut out = Vec::with_capacity(self.cells());
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.push([mid[i], mid[j], mid[k]]);
                }
            }
        }
        out
    }
}
