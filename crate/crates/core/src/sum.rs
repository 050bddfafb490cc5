//! Fixed-order reductions.
//!
//! Every reduction in the crate goes through these so that results never
//! depend on how a loop happened to be written: pairwise summation with a
//! fixed block size is deterministic and has O(log n) error growth.

const BLOCK: usize = 64;

/// Pairwise sum of `f(i)` for `i in 0..n`.
pub fn pairwise_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= BLOCK {
            let mut s = 0.0;
            for i in lo..hi {
                s += f(i);
            }
            s
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, f) + rec(mid, hi, f)
        }
    }
    if n == 0 {
        0.0
    } else {
        rec(0, n, f)
    }
}

pub fn pairwise(xs: &[f64]) -> f64 {
    pairwise_by(xs.len(), &|i| xs[i])
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_by(a.len(), &|i| a[i] * b[i])
}

/// Σ w_i a_i b_i.
pub fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    debug_assert!(a.len() == b.len() && w.len() == a.len());
    pairwise_by(a.len(), &|i| w[i] * a[i] * b[i])
}

pub fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn pairwise_matches_exact_integer_sum() {
        let xs: Vec<f64> = (1..=10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise(&xs), 50_005_000.0);
    }

    #[test]
    fn pairwise_beats_naive_on_ill_conditioned_sum() {
        let xs: Vec<f64> = (0..1_000_000).map(|_| 0.1).collect();
        let naive: f64 = xs.iter().sum();
        let exact = 100_000.0;
        assert!((pairwise(&xs) - exact).abs() < (naive - exact).abs());
    }
}
