//! Radix-2 complex FFT and the zero-padded 3-D convolution built on it.
//!
//! The Landau kernel is translation invariant on a uniform velocity lattice,
//! so every kernel sum Σ_b φ(ξ_a − ξ_b) f_b is a linear convolution. We embed
//! the N³ lattice in a P³ periodic box with P ≥ 2N − 1, which makes the
//! circular convolution exact.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

/// Plan for length-`n` (power of two) complex transforms.
#[derive(Debug, Clone)]
pub struct Fft1 {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
    rev: Vec<usize>,
}

impl Fft1 {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "FFT length must be a power of two");
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }).collect();
        let half = n / 2;
        let cos = (0..half).map(|k| libm::cos(2.0 * PI * k as f64 / n as f64)).collect();
        let sin = (0..half).map(|k| libm::sin(2.0 * PI * k as f64 / n as f64)).collect();
        Self { n, cos, sin, rev }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place transform; `inverse` flips the exponent sign and does *not* scale.
    pub fn run(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        let n = self.n;
        for i in 0..n {
            let j = self.rev[i];
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let sign = if inverse { 1.0 } else { -1.0 };
        let mut len = 2;
        while len <= n {
            let step = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let wr = self.cos[k * step];
                    let wi = sign * self.sin[k * step];
                    let a = start + k;
                    let b = a + half;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }
}

/// Cubic P³ transform, row-major with the last index fastest.
#[derive(Debug, Clone)]
pub struct Fft3 {
    plan: Fft1,
}

impl Fft3 {
    pub fn new(p: usize) -> Self {
        Self { plan: Fft1::new(p) }
    }

    pub fn side(&self) -> usize {
        self.plan.len()
    }

    pub fn run(&self, re: &mut [f64], im: &mut [f64], inverse: bool) {
        let p = self.side();
        debug_assert_eq!(re.len(), p * p * p);
        let mut br = vec![0.0; p];
        let mut bi = vec![0.0; p];
        for stride in [1, p, p * p] {
            for base in 0..p * p * p {
                // `base` enumerates line starts: indices whose coordinate along
                // the current axis is zero.
                if (base / stride) % p != 0 {
                    continue;
                }
                for t in 0..p {
                    br[t] = re[base + t * stride];
                    bi[t] = im[base + t * stride];
                }
                self.plan.run(&mut br, &mut bi, inverse);
                for t in 0..p {
                    re[base + t * stride] = br[t];
                    im[base + t * stride] = bi[t];
                }
            }
        }
        if inverse {
            let s = 1.0 / (p * p * p) as f64;
            re.iter_mut().for_each(|x| *x *= s);
            im.iter_mut().for_each(|x| *x *= s);
        }
    }
}

/// Linear convolutions on an N³ lattice against fixed even kernels.
///
/// Kernels are supplied as functions of the integer offset (di, dj, dk) with
/// |d| < N; evenness k(−d) = k(d) makes their spectra real, which halves the
/// work: two real inputs ride in the real and imaginary parts of one transform.
#[derive(Debug, Clone)]
pub struct LatticeConvolver {
    n: usize,
    fft: Fft3,
    spectra: Vec<Vec<f64>>,
}

impl LatticeConvolver {
    pub fn new<K: Fn(i64, i64, i64) -> f64>(n: usize, kernels: &[K]) -> Self {
        let p = (2 * n - 1).next_power_of_two();
        let fft = Fft3::new(p);
        let spectra = kernels
            .iter()
            .map(|k| {
                let mut re = vec![0.0; p * p * p];
                let mut im = vec![0.0; p * p * p];
                let wrap = |i: usize| -> Option<i64> {
                    let d = if i < n { i as i64 } else { i as i64 - p as i64 };
                    (d.unsigned_abs() < n as u64).then_some(d)
                };
                for i in 0..p {
                    let Some(di) = wrap(i) else { continue };
                    for j in 0..p {
                        let Some(dj) = wrap(j) else { continue };
                        for l in 0..p {
                            let Some(dl) = wrap(l) else { continue };
                            re[(i * p + j) * p + l] = k(di, dj, dl);
                        }
                    }
                }
                fft.run(&mut re, &mut im, false);
                re
            })
            .collect();
        Self { n, fft, spectra }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn padded_side(&self) -> usize {
        self.fft.side()
    }

    fn embed(&self, x: &[f64], out: &mut [f64]) {
        let (n, p) = (self.n, self.fft.side());
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for j in 0..n {
                let src = (i * n + j) * n;
                let dst = (i * p + j) * p;
                out[dst..dst + n].copy_from_slice(&x[src..src + n]);
            }
        }
    }

    fn extract(&self, y: &[f64], out: &mut [f64]) {
        let (n, p) = (self.n, self.fft.side());
        for i in 0..n {
            for j in 0..n {
                let src = (i * p + j) * p;
                let dst = (i * n + j) * n;
                out[dst..dst + n].copy_from_slice(&y[src..src + n]);
            }
        }
    }

    /// Forward spectra of the inputs, packed two per complex transform.
    fn forward(&self, inputs: &[&[f64]]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let len = self.fft.side().pow(3);
        inputs
            .chunks(2)
            .map(|pair| {
                let mut re = vec![0.0; len];
                let mut im = vec![0.0; len];
                self.embed(pair[0], &mut re);
                if pair.len() == 2 {
                    self.embed(pair[1], &mut im);
                }
                self.fft.run(&mut re, &mut im, false);
                (re, im)
            })
            .collect()
    }

    /// out[o] = Σ_s kernel[plan[o][s].0] ∗ inputs[plan[o][s].1].
    ///
    /// Each output is a sum of kernel/input products; outputs are returned on
    /// the N³ lattice.
    pub fn apply(&self, inputs: &[&[f64]], plan: &[&[(usize, usize)]]) -> Vec<Vec<f64>> {
        let n3 = self.n.pow(3);
        let len = self.fft.side().pow(3);
        let spec = self.forward(inputs);
        let mut outs = Vec::with_capacity(plan.len());
        // Outputs are also packed two at a time through the inverse transform.
        for pair in plan.chunks(2) {
            let mut re = vec![0.0; len];
            let mut im = vec![0.0; len];
            for (slot, terms) in pair.iter().enumerate() {
                for &(kern, input) in terms.iter() {
                    let k = &self.spectra[kern];
                    let (sr, si) = &spec[input / 2];
                    // Unpack the spectrum of one real input from its packed pair:
                    // X0(f) = (Z(f) + conj Z(−f))/2, X1(f) = (Z(f) − conj Z(−f))/2i.
                    let p = self.fft.side();
                    for i in 0..p {
                        let mi = (p - i) % p;
                        for j in 0..p {
                            let mj = (p - j) % p;
                            for l in 0..p {
                                let ml = (p - l) % p;
                                let a = (i * p + j) * p + l;
                                let b = (mi * p + mj) * p + ml;
                                let (xr, xi) = if input % 2 == 0 {
                                    (0.5 * (sr[a] + sr[b]), 0.5 * (si[a] - si[b]))
                                } else {
                                    (0.5 * (si[a] + si[b]), -0.5 * (sr[a] - sr[b]))
                                };
                                // Outputs are packed as y0 + i·y1.
                                let (yr, yi) = (k[a] * xr, k[a] * xi);
                                if slot == 0 {
                                    re[a] += yr;
                                    im[a] += yi;
                                } else {
                                    re[a] -= yi;
                                    im[a] += yr;
                                }
                            }
                        }
                    }
                }
            }
            self.fft.run(&mut re, &mut im, true);
            let mut o0 = vec![0.0; n3];
            self.extract(&re, &mut o0);
            outs.push(o0);
            if pair.len() == 2 {
                let mut o1 = vec![0.0; n3];
                self.extract(&im, &mut o1);
                outs.push(o1);
            }
        }
        outs
    }
}
