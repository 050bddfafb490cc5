//! The Coulomb kernel φ(z) = |z|⁻¹(I − ẑẑᵀ) sampled on lattice offsets.

use crate::velocity_space::quadrature::gauss_legendre;

/// ∫ over the unit cube [−½, ½]³ of 1/|z|: 6 ln((1+√3)/√2) − π/2.
pub fn unit_cube_inverse_distance() -> f64 {
    let s3 = libm::sqrt(3.0);
    6.0 * libm::log((1.0 + s3) / libm::sqrt(2.0)) - core::f64::consts::PI / 2.0
}

/// Component order for the six independent entries of a symmetric 3×3 tensor.
pub const COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Index into [`COMPONENTS`] for (i, j) in either order.
pub const fn component(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) | (1, 0) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Kernel entries on a lattice of spacing h.
///
/// The self pair gets the cell average of φ, which is (2/3)⟨1/|z|⟩ I by cubic
/// symmetry. Offsets with 0 < |z| < `reg_radius` get ⟨1/|z|⟩_cell (I − ẑẑᵀ):
/// the magnitude is regularised but the projector is kept, so φ(z)z = 0
/// still holds exactly — that identity is what makes energy conservation
/// structural. Everything else is the point value.
#[derive(Debug, Clone, Copy)]
pub struct CoulombKernel {
    h: f64,
    reg_radius: f64,
}

impl CoulombKernel {
    pub fn new(h: f64, reg_radius: f64) -> Self {
        Self { h, reg_radius }
    }

    pub fn entry(&self, comp: usize, d: [i64; 3]) -> f64 {
        let (i, j) = COMPONENTS[comp];
        if d == [0, 0, 0] {
            let avg = unit_cube_inverse_distance() / self.h;
            return if i == j { 2.0 / 3.0 * avg } else { 0.0 };
        }
        let z = d.map(|c| c as f64 * self.h);
        let r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
        let r = libm::sqrt(r2);
        let mag = if r < self.reg_radius { self.cell_average_inverse_distance(z) } else { 1.0 / r };
        let delta = if i == j { 1.0 } else { 0.0 };
        mag * (delta - z[i] * z[j] / r2)
    }

    /// ⟨1/|z|⟩ over the lattice cell centred at `z` (which excludes the origin).
    fn cell_average_inverse_distance(&self, z: [f64; 3]) -> f64 {
        let (x, w) = gauss_legendre(8);
        let mut s = 0.0;
        for (a, wa) in x.iter().zip(&w) {
            for (b, wb) in x.iter().zip(&w) {
                for (c, wc) in x.iter().zip(&w) {
                    let p = [z[0] + 0.5 * self.h * a, z[1] + 0.5 * self.h * b, z[2] + 0.5 * self.h * c];
                    s += wa * wb * wc / libm::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
                }
            }
        }
        s / 8.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_constant_matches_brute_force_midpoint_sum() {
        // Midpoint rule on a 200³ subdivision avoids the origin exactly.
        let m = 200;
        let h = 1.0 / m as f64;
        let mut s = 0.0;
        for i in 0..m {
            let x = -0.5 + (i as f64 + 0.5) * h;
            for j in 0..m {
                let y = -0.5 + (j as f64 + 0.5) * h;
                for k in 0..m {
                    let z = -0.5 + (k as f64 + 0.5) * h;
                    s += 1.0 / libm::sqrt(x * x + y * y + z * z);
                }
            }
        }
        s *= h * h * h;
        assert!((s - unit_cube_inverse_distance()).abs() < 2e-3, "{s}");
        assert!((unit_cube_inverse_distance() - 2.380_077_6).abs() < 1e-6);
    }

    #[test]
    fn kernel_annihilates_its_offset() {
        let k = CoulombKernel::new(0.7, 1.5);
        for d in [[1, 0, 0], [1, 1, 0], [2, -1, 3], [0, 0, 1]] {
            let z = d.map(|c| c as f64);
            for i in 0..3 {
                let s: f64 = (0..3).map(|j| k.entry(component(i, j), d) * z[j]).sum();
                assert!(s.abs() < 1e-15, "{d:?}");
            }
        }
    }
}
