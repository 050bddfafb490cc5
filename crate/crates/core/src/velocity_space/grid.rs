use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::{sum, Error, Result};

/// Uniform tensor grid on [−L, L]³ with the product trapezoidal rule.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    half_width: f64,
    n: usize,
    h: f64,
    axis: Vec<f64>,
    weights: Vec<f64>,
    diff: Diff1,
}

impl VelocityGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(alloc::format!("half width must be positive, got {half_width}")));
        }
        if n < 4 {
            return Err(Error::Domain(alloc::format!("need at least 4 points per axis, got {n}")));
        }
        let h = 2.0 * half_width / (n - 1) as f64;
        // Symmetric placement: node i and node n−1−i are exact negatives.
        let axis: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 - (n - 1) as f64) * 0.5 * h).collect();
        let w1: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
        let mut weights = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    weights.push(w1[i] * w1[j] * w1[k]);
                }
            }
        }
        Ok(Self { half_width, n, h, axis, weights, diff: Diff1::new(n, h) })
    }

    /// Grid of half-width `hat_half_width · √(Rθ)`: the same lattice in the
    /// thermal variable (ξ − u)/√(Rθ) for every temperature.
    pub fn thermal(hat_half_width: f64, n: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(Error::Domain(alloc::format!("temperature must be positive, got {theta}")));
        }
        Self::new(hat_half_width * libm::sqrt(crate::R_GAS * theta), n)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spacing(&self) -> f64 {
        self.h
    }
    pub fn axis(&self) -> &[f64] {
        &self.axis
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn triple(&self, a: usize) -> (usize, usize, usize) {
        let n = self.n;
        (a / (n * n), (a / n) % n, a % n)
    }

    #[inline]
    pub fn node(&self, a: usize) -> [f64; 3] {
        let (i, j, k) = self.triple(a);
        [self.axis[i], self.axis[j], self.axis[k]]
    }

    /// 4|ξ|²/h², an exact integer on this lattice; used to key radial tables.
    pub fn radius_key(&self, a: usize) -> u64 {
        let (i, j, k) = self.triple(a);
        let m = (self.n - 1) as i64;
        [i, j, k].iter().map(|&c| (2 * c as i64 - m).pow(2) as u64).sum()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        sum::dot(&self.weights, f)
    }

    /// ∫ a b dξ.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        sum::wdot(&self.weights, a, b)
    }

    /// Discrete gradient: second-order central differences, one-sided second
    /// order on the boundary faces. Exact on quadratics.
    pub fn gradient(&self, f: &[f64]) -> [Vec<f64>; 3] {
        [self.derivative(f, 0), self.derivative(f, 1), self.derivative(f, 2)]
    }

    pub fn derivative(&self, f: &[f64], axis: usize) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        self.for_each_line(axis, |line| {
            for (r, row) in self.diff.rows.iter().enumerate() {
                out[line[r]] = row.iter().map(|&(c, w)| w * f[line[c]]).sum();
            }
        });
        out
    }

    /// Adds Dᵀ along `axis` applied to `f` into `out`.
    pub fn derivative_transpose_add(&self, f: &[f64], axis: usize, out: &mut [f64]) {
        self.for_each_line(axis, |line| {
            for (r, row) in self.diff.rows.iter().enumerate() {
                let fr = f[line[r]];
                for &(c, w) in row {
                    out[line[c]] += w * fr;
                }
            }
        });
    }

    fn for_each_line<F: FnMut(&[usize])>(&self, axis: usize, mut f: F) {
        let n = self.n;
        let stride = n.pow(2 - axis as u32);
        let mut line = vec![0usize; n];
        for base in 0..self.len() {
            if (base / stride) % n != 0 {
                continue;
            }
            for (t, slot) in line.iter_mut().enumerate() {
                *slot = base + t * stride;
            }
            f(&line);
        }
    }
}

/// Sparse 1-D first-derivative stencil.
#[derive(Debug, Clone, PartialEq)]
struct Diff1 {
    rows: Vec<[(usize, f64); 3]>,
}

impl Diff1 {
    fn new(n: usize, h: f64) -> Self {
        let s = 0.5 / h;
        let rows = (0..n)
            .map(|i| {
                if i == 0 {
                    [(0, -3.0 * s), (1, 4.0 * s), (2, -s)]
                } else if i == n - 1 {
                    [(n - 1, 3.0 * s), (n - 2, -4.0 * s), (n - 3, s)]
                } else {
                    [(i - 1, -s), (i, 0.0), (i + 1, s)]
                }
            })
            .collect();
        Self { rows }
    }
}

/// A real function sampled on the nodes of a velocity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    grid: Arc<VelocityGrid>,
    values: Vec<f64>,
}

impl VelocityField {
    pub fn new(grid: Arc<VelocityGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(alloc::format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(a) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(alloc::format!("non-finite value at node {a}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<VelocityGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn<F: FnMut([f64; 3]) -> f64>(grid: Arc<VelocityGrid>, mut f: F) -> Self {
        let values = (0..grid.len()).map(|a| f(grid.node(a))).collect();
        Self { grid, values }
    }

    /// Same grid, new values; the caller guarantees the length.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self { grid: self.grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::Shape("fields live on different velocity grids".into()))
        }
    }

    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    /// L² inner product ∫ f g dξ.
    pub fn inner(&self, other: &Self) -> f64 {
        self.grid.inner(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.inner(self))
    }

    pub fn max_abs(&self) -> f64 {
        sum::max_abs(&self.values)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.with_values(self.values.iter().map(|v| s * v).collect())
    }

    /// self + s·other.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect())
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }
}
