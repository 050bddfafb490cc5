//! The viscous contact wave: self-similar solution Θ(ζ), ζ = x/√(1+t), of
//! θ_t = (a(θ)θ_x)_x, the profile [v̄, ū, θ̄] assembled from it, and the
//! checks of its envelope, decay rates and remainder terms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chapman_enskog::Transport;
use crate::fit::{log_log, LineFit};
use crate::{Error, Result, R_GAS};

/// Far-field states of a contact discontinuity: equal velocity and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldData {
    pub v_minus: f64,
    pub u_minus: [f64; 3],
    pub theta_minus: f64,
    pub v_plus: f64,
    pub u_plus: [f64; 3],
    pub theta_plus: f64,
}

const FAR_FIELD_TOL: f64 = 1e-12;

impl FarFieldData {
    pub fn new(v_minus: f64, u_minus: [f64; 3], theta_minus: f64, v_plus: f64, u_plus: [f64; 3], theta_plus: f64) -> Result<Self> {
        let far = Self { v_minus, u_minus, theta_minus, v_plus, u_plus, theta_plus };
        far.validate()?;
        Ok(far)
    }

    /// States with pressure p₊ and normal velocity u₁ on both sides; v± = Rθ±/p₊.
    pub fn from_temperatures(theta_minus: f64, theta_plus: f64, p_plus: f64, u1: f64) -> Result<Self> {
        if !(p_plus > 0.0) {
            return Err(Error::Domain(format!("pressure must be positive, got {p_plus}")));
        }
        let u = [u1, 0.0, 0.0];
        Self::new(R_GAS * theta_minus / p_plus, u, theta_minus, R_GAS * theta_plus / p_plus, u, theta_plus)
    }

    /// θ± = 1.5 ∓ 0.05 at p₊ = 1, u = 0 (δ = 0.1 around the reference state).
    pub fn default_run() -> Self {
        Self::from_temperatures(1.55, 1.45, 1.0, 0.0).unwrap_or(Self {
            v_minus: 1.0,
            u_minus: [0.0; 3],
            theta_minus: 1.5,
            v_plus: 1.0,
            u_plus: [0.0; 3],
            theta_plus: 1.5,
        })
    }

    /// δ = 0 (θ₋ = θ₊, hence v₋ = v₊) is admitted as the trivial constant wave.
    pub fn validate(&self) -> Result<()> {
        if !(self.v_minus > 0.0 && self.v_plus > 0.0 && self.theta_minus > 0.0 && self.theta_plus > 0.0) {
            return Err(Error::Domain(format!("far fields need v± > 0, θ± > 0: {self:?}")));
        }
        if (0..3).any(|i| (self.u_minus[i] - self.u_plus[i]).abs() > FAR_FIELD_TOL) {
            return Err(Error::Domain(format!("u₋ = {:?} differs from u₊ = {:?}", self.u_minus, self.u_plus)));
        }
        if (self.u_minus[1].abs() + self.u_minus[2].abs()) > FAR_FIELD_TOL {
            return Err(Error::Domain("transverse far-field velocity must vanish".into()));
        }
        let (pm, pp) = (self.p_minus(), self.p_plus());
        if (pm - pp).abs() > FAR_FIELD_TOL * pp {
            return Err(Error::Domain(format!("p₋ = {pm} differs from p₊ = {pp}")));
        }
        Ok(())
    }

    pub fn p_minus(&self) -> f64 {
        R_GAS * self.theta_minus / self.v_minus
    }

    pub fn p_plus(&self) -> f64 {
        R_GAS * self.theta_plus / self.v_plus
    }

    /// Wave strength δ = |θ₊ − θ₋|.
    pub fn delta(&self) -> f64 {
        (self.theta_plus - self.theta_minus).abs()
    }

    pub fn swapped(&self) -> Self {
        Self {
            v_minus: self.v_plus,
            u_minus: self.u_plus,
            theta_minus: self.theta_plus,
            v_plus: self.v_minus,
            u_plus: self.u_minus,
            theta_plus: self.theta_minus,
        }
    }

    /// Largest deviation of either far state from (1, 0, 3/2).
    pub fn closeness(&self) -> f64 {
        let dev = |v: f64, u: [f64; 3], th: f64| (v - 1.0).abs() + libm::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) + (th - 1.5).abs();
        dev(self.v_minus, self.u_minus, self.theta_minus).max(dev(self.v_plus, self.u_plus, self.theta_plus))
    }

    /// The smallness gate around the reference state.
    pub fn check_closeness(&self, eta0: f64) -> Result<()> {
        let c = self.closeness();
        if c >= eta0 {
            return Err(Error::Precondition(format!("far fields deviate by {c:.3e} from (1, 0, 3/2), gate η₀ = {eta0}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSettings {
    /// Half-width Z of the ζ-interval.
    pub z: f64,
    /// Max-norm tolerance on the discrete residual.
    pub tol: f64,
    /// Number of ζ-nodes including both ends.
    pub nodes: usize,
    pub max_iterations: usize,
}

impl Default for ProfileSettings {
    fn default() -> Self {
        Self { z: 20.0, tol: 1e-10, nodes: 8001, max_iterations: 200 }
    }
}

/// Θ(ζ) on [−Z, Z] with a C² quintic Hermite interpolant through
/// (Θ, Θ′, Θ″) at the nodes; Θ‴ comes from differentiating the ODE.
#[derive(Debug, Clone)]
pub struct ContactWaveProfile {
    far: FarFieldData,
    transport: Transport,
    z: f64,
    h: f64,
    theta: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    residual: f64,
    iterations: usize,
}

/// A field with its (t, x)-derivatives through second order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub val: f64,
    pub t: f64,
    pub x: f64,
    pub tt: f64,
    pub tx: f64,
    pub xx: f64,
}

/// [v̄, ū₁, θ̄] at one (t, x); ū₂ = ū₃ = 0.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WaveJet {
    pub v: Jet,
    pub u1: Jet,
    pub theta: Jet,
}

/// Solves (a(Θ)Θ′)′ + (ζ/2)Θ′ = 0, Θ(±Z) = θ±. For δ > 0.5 the solve walks a
/// ladder of intermediate right states, reusing each solution as the guess.
pub fn solve_selfsimilar(far: FarFieldData, transport: Transport, settings: ProfileSettings) -> Result<ContactWaveProfile> {
    far.validate()?;
    if !(settings.z > 0.0) || settings.nodes < 5 {
        return Err(Error::Precondition(format!("need Z > 0 and at least 5 nodes, got Z = {}, {} nodes", settings.z, settings.nodes)));
    }
    let p = far.p_plus();
    let (lo, hi) = (far.theta_minus.min(far.theta_plus), far.theta_minus.max(far.theta_plus));
    for th in [lo, 0.5 * (lo + hi), hi] {
        let a = transport.diffusivity(th, p)[0];
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("a(θ) = {a} at θ = {th}")));
        }
    }
    let n = settings.nodes;
    let h = 2.0 * settings.z / (n - 1) as f64;
    let zeta: Vec<f64> = (0..n).map(|i| -settings.z + h * i as f64).collect();
    let steps = libm::ceil(far.delta() / 0.5).max(1.0) as usize;
    let mut theta: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut residual = 0.0;
    for s in 1..=steps {
        let target = far.theta_minus + (far.theta_plus - far.theta_minus) * s as f64 / steps as f64;
        let guess = if theta.is_empty() {
            // Heat-kernel profile with the diffusivity at the mean temperature.
            let a = transport.diffusivity(0.5 * (far.theta_minus + target), p)[0];
            zeta.iter()
                .map(|&z| far.theta_minus + 0.5 * (target - far.theta_minus) * (1.0 + libm::erf(z / (2.0 * libm::sqrt(a)))))
                .collect()
        } else {
            let prev = theta[n - 1];
            theta
                .iter()
                .map(|&t| {
                    if (prev - far.theta_minus).abs() > 0.0 {
                        far.theta_minus + (t - far.theta_minus) * (target - far.theta_minus) / (prev - far.theta_minus)
                    } else {
                        t
                    }
                })
                .collect()
        };
        let (sol, it, res) = relax(&zeta, guess, far.theta_minus, target, &transport, p, settings)?;
        theta = sol;
        iterations += it;
        residual = res;
    }
    let d1 = nodal_derivative(&theta, h);
    let d2 = (0..n)
        .map(|i| {
            let [a, a1, _] = transport.diffusivity(theta[i], p);
            -(a1 * d1[i] * d1[i] + 0.5 * zeta[i] * d1[i]) / a
        })
        .collect();
    Ok(ContactWaveProfile { far, transport, z: settings.z, h, theta, d1, d2, residual, iterations })
}

/// Discrete residual F_i of the conservative scheme and its tridiagonal Jacobian.
fn residual_and_jacobian(
    zeta: &[f64],
    th: &[f64],
    tr: &Transport,
    p: f64,
    h: f64,
    jac: Option<(&mut [f64], &mut [f64], &mut [f64])>,
) -> Vec<f64> {
    let n = th.len();
    let mut f = vec![0.0; n];
    let half: Vec<[f64; 3]> = (0..n - 1).map(|i| tr.diffusivity(0.5 * (th[i] + th[i + 1]), p)).collect();
    let h2 = h * h;
    for i in 1..n - 1 {
        let (ar, al) = (half[i][0], half[i - 1][0]);
        let (gr, gl) = (th[i + 1] - th[i], th[i] - th[i - 1]);
        f[i] = (ar * gr - al * gl) / h2 + zeta[i] * (th[i + 1] - th[i - 1]) / (4.0 * h);
    }
    if let Some((lower, diag, upper)) = jac {
        for i in 1..n - 1 {
            let (ar, dr) = (half[i][0], half[i][1]);
            let (al, dl) = (half[i - 1][0], half[i - 1][1]);
            let (gr, gl) = (th[i + 1] - th[i], th[i] - th[i - 1]);
            upper[i] = (ar + 0.5 * dr * gr) / h2 + zeta[i] / (4.0 * h);
            lower[i] = (al - 0.5 * dl * gl) / h2 - zeta[i] / (4.0 * h);
            diag[i] = (0.5 * dr * gr - ar - al - 0.5 * dl * gl) / h2;
        }
    }
    f
}

const ROUNDOFF_FLOOR: f64 = 64.0 * f64::EPSILON;

/// Pseudo-transient continuation (switched evolution relaxation of the step
/// Δτ) that turns into plain Newton once Δτ is large.
fn relax(
    zeta: &[f64],
    mut th: Vec<f64>,
    left: f64,
    right: f64,
    tr: &Transport,
    p: f64,
    settings: ProfileSettings,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = th.len();
    let h = zeta[1] - zeta[0];
    th[0] = left;
    th[n - 1] = right;
    let (mut lower, mut diag, mut upper) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut dtau = 1.0;
    let mut prev_norm = f64::INFINITY;
    for it in 0..settings.max_iterations {
        let f = residual_and_jacobian(zeta, &th, tr, p, h, Some((&mut lower, &mut diag, &mut upper)));
        let norm = crate::sum::max_abs(&f);
        if !norm.is_finite() {
            break;
        }
        if norm <= settings.tol {
            return Ok((th, it, norm));
        }
        if prev_norm.is_finite() {
            dtau = (dtau * prev_norm / norm).min(1e300);
        }
        prev_norm = norm;
        // (I/Δτ − J)δ = F on the interior nodes.
        let m = n - 2;
        let a: Vec<f64> = (0..m).map(|k| -lower[k + 1]).collect();
        let b: Vec<f64> = (0..m).map(|k| 1.0 / dtau - diag[k + 1]).collect();
        let c: Vec<f64> = (0..m).map(|k| -upper[k + 1]).collect();
        let d: Vec<f64> = (0..m).map(|k| f[k + 1]).collect();
        let delta = thomas(&a, &b, &c, &d)?;
        for k in 0..m {
            th[k + 1] += delta[k];
        }
        if th.iter().any(|t| !(*t > 0.0)) {
            break;
        }
        // Newton has stalled at round-off; accept if the residual is at the
        // floor ε·max(a)·max(Θ)/h² set by cancellation in the second difference.
        let step = crate::sum::max_abs(&delta);
        let scale = th.iter().cloned().fold(0.0, f64::max);
        if step <= 1e-13 * scale {
            let f = residual_and_jacobian(zeta, &th, tr, p, h, None);
            let res = crate::sum::max_abs(&f);
            let a_max = th.iter().map(|&t| tr.diffusivity(t, p)[0]).fold(0.0, f64::max);
            if res <= settings.tol.max(ROUNDOFF_FLOOR * a_max * scale / (h * h)) {
                return Ok((th, it + 1, res));
            }
        }
    }
    let f = residual_and_jacobian(zeta, &th, tr, p, h, None);
    let res = crate::sum::max_abs(&f);
    if res <= settings.tol {
        return Ok((th, settings.max_iterations, res));
    }
    Err(Error::Convergence {
        iterations: settings.max_iterations,
        residual: res,
        hint: "continue in δ with smaller ladder steps or refine the ζ-grid".into(),
    })
}

/// Tridiagonal solve; a = sub-diagonal (a[0] unused), c = super-diagonal.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    let m = b.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut denom = b[0];
    for k in 0..m {
        if k > 0 {
            denom = b[k] - a[k] * cp[k - 1];
        }
        if denom.abs() < 1e-300 {
            return Err(Error::Degenerate("singular tridiagonal system".into()));
        }
        cp[k] = c[k] / denom;
        dp[k] = (d[k] - if k > 0 { a[k] * dp[k - 1] } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for k in (0..m - 1).rev() {
        x[k] = dp[k] - cp[k] * x[k + 1];
    }
    Ok(x)
}

/// Fourth-order central differences, second-order one-sided at the ends.
fn nodal_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
            } else if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
            } else if i + 1 == n {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

impl ContactWaveProfile {
    pub fn far(&self) -> &FarFieldData {
        &self.far
    }

    pub fn transport(&self) -> &Transport {
        &self.transport
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn nodes(&self) -> usize {
        self.theta.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Max-norm of the discrete residual at convergence.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn zeta(&self, i: usize) -> f64 {
        -self.z + self.h * i as f64
    }

    /// Nodal (ζ, Θ, Θ′, Θ″).
    pub fn samples(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        (0..self.theta.len()).map(move |i| [self.zeta(i), self.theta[i], self.d1[i], self.d2[i]])
    }

    pub fn p_plus(&self) -> f64 {
        self.far.p_plus()
    }

    /// a(θ), a′(θ), a″(θ).
    pub fn diffusivity(&self, theta: f64) -> [f64; 3] {
        self.transport.diffusivity(theta, self.p_plus())
    }

    /// Θ, Θ′, Θ″, Θ‴ at ζ; constant beyond ±Z.
    pub fn theta_derivs(&self, zeta: f64) -> [f64; 4] {
        if zeta <= -self.z {
            return [self.theta[0], 0.0, 0.0, 0.0];
        }
        if zeta >= self.z {
            return [self.theta[self.theta.len() - 1], 0.0, 0.0, 0.0];
        }
        let s = (zeta + self.z) / self.h;
        let i = (libm::floor(s) as usize).min(self.theta.len() - 2);
        let t = s - i as f64;
        let h = self.h;
        let (p0, m0, c0) = (self.theta[i], self.d1[i] * h, self.d2[i] * h * h);
        let (p1, m1, c1) = (self.theta[i + 1], self.d1[i + 1] * h, self.d2[i + 1] * h * h);
        let [b0, b1, b2, b3, b4, b5] = quintic_basis(t, 0);
        let [e0, e1, e2, e3, e4, e5] = quintic_basis(t, 1);
        let [g0, g1, g2, g3, g4, g5] = quintic_basis(t, 2);
        let th = b0 * p0 + b1 * m0 + b2 * c0 + b3 * p1 + b4 * m1 + b5 * c1;
        let d1 = (e0 * p0 + e1 * m0 + e2 * c0 + e3 * p1 + e4 * m1 + e5 * c1) / h;
        let d2 = (g0 * p0 + g1 * m0 + g2 * c0 + g3 * p1 + g4 * m1 + g5 * c1) / (h * h);
        let [a, a1, a2] = self.diffusivity(th);
        let d3 = -(3.0 * a1 * d1 * d2 + a2 * d1 * d1 * d1 + 0.5 * d1 + 0.5 * zeta * d2) / a;
        [th, d1, d2, d3]
    }

    /// (a(Θ)Θ′)′ + (ζ/2)Θ′ evaluated on the interpolant.
    pub fn ode_residual(&self, zeta: f64) -> f64 {
        let [th, d1, d2, _] = self.theta_derivs(zeta);
        let [a, a1, _] = self.diffusivity(th);
        a * d2 + a1 * d1 * d1 + 0.5 * zeta * d1
    }

    /// v̄, ū₁, θ̄ and their (t, x)-derivatives through second order, by the
    /// exact chain rule through ζ = x/√(1+t).
    pub fn jet(&self, t: f64, x: f64) -> WaveJet {
        let s = 1.0 + t;
        let r = 1.0 / libm::sqrt(s);
        let z = x * r;
        let [th, d1, d2, d3] = self.theta_derivs(z);
        let [a, a1, a2] = self.diffusivity(th);
        // ζ-derivatives of the flux φ = a(Θ)Θ′.
        let phi = a * d1;
        let phi1 = a1 * d1 * d1 + a * d2;
        let phi2 = a2 * d1 * d1 * d1 + 3.0 * a1 * d1 * d2 + a * d3;
        let zt = -z / (2.0 * s);
        let ztt = 0.75 * z / (s * s);
        let ztx = -r / (2.0 * s);
        let rt = -r / (2.0 * s);
        let rtt = 0.75 * r / (s * s);

        let theta = Jet { val: th, x: d1 * r, xx: d2 * r * r, t: d1 * zt, tx: d2 * r * zt + d1 * ztx, tt: d2 * zt * zt + d1 * ztt };
        let c = 2.0 / (3.0 * self.p_plus());
        let scale = |j: Jet, k: f64| Jet { val: j.val * k, t: j.t * k, x: j.x * k, tt: j.tt * k, tx: j.tx * k, xx: j.xx * k };
        let v = scale(theta, c);
        // g = φ(ζ)·r, ū₁ = u₁₋ + c·g.
        let g = Jet {
            val: phi * r,
            x: phi1 * r * r,
            xx: phi2 * r * r * r,
            t: phi1 * zt * r + phi * rt,
            tx: phi2 * zt * r * r - phi1 * r * r / s,
            tt: phi2 * zt * zt * r + phi1 * ztt * r + 2.0 * phi1 * zt * rt + phi * rtt,
        };
        let mut u1 = scale(g, c);
        u1.val += self.far.u_minus[0];
        WaveJet { v, u1, theta }
    }

    /// [v̄, ū₁, θ̄] at (t, x).
    pub fn state(&self, t: f64, x: f64) -> [f64; 3] {
        let j = self.jet(t, x);
        [j.v.val, j.u1.val, j.theta.val]
    }
}

/// Quintic Hermite basis on [0, 1] (value, slope and curvature at both ends),
/// differentiated `order` times.
fn quintic_basis(t: f64, order: usize) -> [f64; 6] {
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    match order {
        0 => [
            1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5,
            t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5,
            0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
            10.0 * t3 - 15.0 * t4 + 6.0 * t5,
            -4.0 * t3 + 7.0 * t4 - 3.0 * t5,
            0.5 * t3 - t4 + 0.5 * t5,
        ],
        1 => [
            -30.0 * t2 + 60.0 * t3 - 30.0 * t4,
            1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4,
            t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
            30.0 * t2 - 60.0 * t3 + 30.0 * t4,
            -12.0 * t2 + 28.0 * t3 - 15.0 * t4,
            1.5 * t2 - 4.0 * t3 + 2.5 * t4,
        ],
        _ => [
            -60.0 * t + 180.0 * t2 - 120.0 * t3,
            -36.0 * t + 96.0 * t2 - 60.0 * t3,
            1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
            60.0 * t - 180.0 * t2 + 120.0 * t3,
            -24.0 * t + 84.0 * t2 - 60.0 * t3,
            3.0 * t - 12.0 * t2 + 10.0 * t3,
        ],
    }
}

/// Fitted Gaussian envelope Cδe^{−c₁x²/(1+t)} of the weighted derivative sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeReport {
    pub c: f64,
    pub c1: f64,
    /// max over the samples of lhs / (Cδe^{−c₁ζ²}); 1 by construction when C is the sup.
    pub worst_ratio: f64,
    pub samples_used: usize,
}

/// Samples whose left side is below this multiple of δ are round-off and are
/// excluded from the fit.
pub const ENVELOPE_FLOOR: f64 = 1e-12;

/// Largest admissible growth of C over its c₁ = 0 value.
pub const ENVELOPE_C_INFLATION: f64 = 2.0;

impl ContactWaveProfile {
    /// (1+t)^{3/2}|Θ_xxx| + (1+t)|Θ_xx| + (1+t)^{1/2}|Θ_x| + |Θ − θ±|.
    pub fn envelope_lhs(&self, t: f64, x: f64) -> f64 {
        let s = 1.0 + t;
        let rs = libm::sqrt(s);
        let z = x / rs;
        let [th, d1, d2, d3] = self.theta_derivs(z);
        let (tx, txx, txxx) = (d1 / rs, d2 / s, d3 / (s * rs));
        let end = if x < 0.0 { self.far.theta_minus } else { self.far.theta_plus };
        s * rs * txxx.abs() + s * txx.abs() + rs * tx.abs() + (th - end).abs()
    }
}

/// Finds the largest c₁ for which C(c₁) = sup lhs·e^{c₁ζ²}/δ stays within
/// `ENVELOPE_C_INFLATION`·C(0); reports C = C(c₁).
pub fn verify_envelope(profile: &ContactWaveProfile, t_samples: &[f64], x_samples: &[f64]) -> Result<EnvelopeReport> {
    let delta = profile.far.delta();
    if delta == 0.0 {
        return Ok(EnvelopeReport { c: 0.0, c1: f64::INFINITY, worst_ratio: 0.0, samples_used: 0 });
    }
    let mut pts = Vec::new();
    for &t in t_samples {
        for &x in x_samples {
            let lhs = profile.envelope_lhs(t, x);
            if lhs > ENVELOPE_FLOOR * delta {
                let z = x / libm::sqrt(1.0 + t);
                pts.push((z * z, lhs / delta));
            }
        }
    }
    if pts.is_empty() {
        return Err(Error::Precondition("no envelope samples above the round-off floor".into()));
    }
    let c_of = |c1: f64| pts.iter().map(|&(z2, l)| l * libm::exp(c1 * z2)).fold(0.0, f64::max);
    let cap = ENVELOPE_C_INFLATION * c_of(0.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    while c_of(hi) <= cap && hi < 1e6 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if c_of(mid) <= cap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = c_of(lo);
    let worst = pts.iter().map(|&(z2, l)| l / (c * libm::exp(-lo * z2))).fold(0.0, f64::max);
    Ok(EnvelopeReport { c, c1: lo, worst_ratio: worst, samples_used: pts.len() })
}

/// Which profile quantity a decay fit is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayQuantity {
    /// ∂ₓᵏ[v̄, θ̄].
    SpaceVTheta,
    /// ∂ₓᵏū.
    SpaceU,
    /// ∂ₜᵏ[v̄, θ̄].
    TimeVTheta,
    /// ∂ₜᵏū.
    TimeU,
}

/// Lebesgue exponent q ∈ {1, 2, ∞}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lq {
    One,
    Two,
    Inf,
}

impl Lq {
    /// 1/q.
    pub fn inverse(self) -> f64 {
        match self {
            Lq::One => 1.0,
            Lq::Two => 0.5,
            Lq::Inf => 0.0,
        }
    }
}

impl DecayQuantity {
    /// The rate in (1+t) predicted for this quantity.
    pub fn predicted(self, k: usize, q: Lq) -> f64 {
        let k = k as f64;
        match self {
            DecayQuantity::SpaceVTheta => -0.5 * (k - q.inverse()),
            DecayQuantity::SpaceU => -0.5 * (k - q.inverse()) - 0.5,
            DecayQuantity::TimeVTheta => -(k - 0.5 * q.inverse()),
            DecayQuantity::TimeU => -(k - 0.5 * q.inverse()) - 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub quantity: DecayQuantity,
    pub k: usize,
    pub q: Lq,
    pub fitted: f64,
    pub predicted: f64,
    pub fit: LineFit,
}

/// ‖·‖_{L^q} in x of the chosen derivative at time t, by composite trapezoid
/// quadrature over |x| ≤ Z√(1+t) (the profile is constant outside).
pub fn profile_norm(profile: &ContactWaveProfile, quantity: DecayQuantity, k: usize, q: Lq, t: f64, points: usize) -> f64 {
    let half = profile.z * libm::sqrt(1.0 + t);
    let dx = 2.0 * half / (points - 1) as f64;
    let pick = |x: f64| -> f64 {
        let j = profile.jet(t, x);
        let (vt, u) = match (quantity, k) {
            (DecayQuantity::SpaceVTheta, 1) => ([j.v.x, j.theta.x], None),
            (DecayQuantity::SpaceVTheta, _) => ([j.v.xx, j.theta.xx], None),
            (DecayQuantity::TimeVTheta, 1) => ([j.v.t, j.theta.t], None),
            (DecayQuantity::TimeVTheta, _) => ([j.v.tt, j.theta.tt], None),
            (DecayQuantity::SpaceU, 1) => ([0.0; 2], Some(j.u1.x)),
            (DecayQuantity::SpaceU, _) => ([0.0; 2], Some(j.u1.xx)),
            (DecayQuantity::TimeU, 1) => ([0.0; 2], Some(j.u1.t)),
            (DecayQuantity::TimeU, _) => ([0.0; 2], Some(j.u1.tt)),
        };
        match u {
            Some(u) => u.abs(),
            None => libm::sqrt(vt[0] * vt[0] + vt[1] * vt[1]),
        }
    };
    let vals: Vec<f64> = (0..points).map(|i| pick(-half + dx * i as f64)).collect();
    match q {
        Lq::Inf => vals.iter().cloned().fold(0.0, f64::max),
        Lq::One | Lq::Two => {
            let pw = if q == Lq::One { 1.0 } else { 2.0 };
            let terms: Vec<f64> = vals
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let w = if i == 0 || i + 1 == points { 0.5 } else { 1.0 };
                    w * libm::pow(*v, pw) * dx
                })
                .collect();
            libm::pow(crate::sum::pairwise(&terms), 1.0 / pw)
        }
    }
}

/// Log-log fit of the norm against 1+t over log-spaced times in [t₀, t₁].
pub fn verify_decay_rates(
    profile: &ContactWaveProfile,
    quantity: DecayQuantity,
    k: usize,
    q: Lq,
    t_range: (f64, f64),
    samples: usize,
) -> Result<DecayFit> {
    let (t0, t1) = t_range;
    if !(t0 > 0.0 && t1 >= 100.0 * t0) {
        return Err(Error::Precondition(format!("decay fits need at least two decades of t, got [{t0}, {t1}]")));
    }
    if !(1..=2).contains(&k) {
        return Err(Error::Precondition(format!("derivative order k = {k} outside 1..=2")));
    }
    if profile.far.delta() == 0.0 {
        return Err(Error::Degenerate("constant wave has no decay rate".into()));
    }
    let samples = samples.max(3);
    let ts: Vec<f64> = (0..samples).map(|i| t0 * libm::pow(t1 / t0, i as f64 / (samples - 1) as f64)).collect();
    let norms: Vec<f64> = ts.iter().map(|&t| profile_norm(profile, quantity, k, q, t, 4001)).collect();
    let s: Vec<f64> = ts.iter().map(|t| 1.0 + t).collect();
    let fit = log_log(&s, &norms)?;
    Ok(DecayFit { quantity, k, q, fitted: fit.slope, predicted: quantity.predicted(k, q), fit })
}

/// Remainders R₁ = ū₁ₜ − (4/3)(μ(θ̄)/v̄ ū₁ₓ)ₓ and R₂ = ū₁ū₁ₜ − (4/3)(μ(θ̄)/v̄ ū₁ū₁ₓ)ₓ,
/// plus the residuals of the mass and energy lines of the profile system.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveResiduals {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// v̄ₜ − ū₁ₓ.
    pub mass: Vec<f64>,
    /// θ̄ₜ + p₊ū₁ₓ − (κ(θ̄)/v̄ θ̄ₓ)ₓ, the energy line after R₂ is split off.
    pub energy: Vec<f64>,
}

pub fn residuals_r(profile: &ContactWaveProfile, t: f64, x_grid: &[f64]) -> WaveResiduals {
    let p = profile.p_plus();
    let tr = profile.transport;
    let mut out = WaveResiduals { r1: Vec::new(), r2: Vec::new(), mass: Vec::new(), energy: Vec::new() };
    for &x in x_grid {
        let j = profile.jet(t, x);
        let (v, u, th) = (j.v, j.u1, j.theta);
        let [mu, dmu, _] = tr.mu_derivs(th.val);
        let [ka, dka, _] = tr.kappa_derivs(th.val);
        // (c/v̄)ₓ for a coefficient c(θ̄).
        let coef_x = |c: f64, dc: f64| dc * th.x / v.val - c * v.x / (v.val * v.val);
        let visc = coef_x(mu, dmu) * u.x + mu / v.val * u.xx;
        let r1 = u.t - 4.0 / 3.0 * visc;
        let r2 = u.val * u.t - 4.0 / 3.0 * (coef_x(mu, dmu) * u.val * u.x + mu / v.val * (u.x * u.x + u.val * u.xx));
        let heat = coef_x(ka, dka) * th.x + ka / v.val * th.xx;
        out.r1.push(r1);
        out.r2.push(r2);
        out.mass.push(v.t - u.x);
        out.energy.push(th.t + p * u.x - heat);
    }
    out
}

/// The Riemann contact discontinuity [V̄, Ū, Θ̄](x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactDiscontinuity {
    pub far: FarFieldData,
}

pub fn contact_discontinuity_reference(far: FarFieldData) -> Result<ContactDiscontinuity> {
    far.validate()?;
    Ok(ContactDiscontinuity { far })
}

impl ContactDiscontinuity {
    /// [V̄, Ū₁, Θ̄]; the right state is taken at x = 0.
    pub fn state(&self, x: f64) -> [f64; 3] {
        let f = &self.far;
        if x < 0.0 {
            [f.v_minus, f.u_minus[0], f.theta_minus]
        } else {
            [f.v_plus, f.u_plus[0], f.theta_plus]
        }
    }
}

/// ‖v̄(t) − V̄‖_{L^q}, q ∈ {1, 2}, by midpoint quadrature over |x| ≤ Z√(1+t).
pub fn distance_to_discontinuity(profile: &ContactWaveProfile, step: &ContactDiscontinuity, t: f64, q: Lq, points: usize) -> f64 {
    let half = profile.z * libm::sqrt(1.0 + t);
    let dx = 2.0 * half / points as f64;
    let pw = if q == Lq::One { 1.0 } else { 2.0 };
    let terms: Vec<f64> = (0..points)
        .map(|i| {
            let x = -half + dx * (i as f64 + 0.5);
            let d = (profile.state(t, x)[0] - step.state(x)[0]).abs();
            libm::pow(d, pw) * dx
        })
        .collect();
    if q == Lq::Inf {
        return (0..points)
            .map(|i| {
                let x = -half + dx * (i as f64 + 0.5);
                (profile.state(t, x)[0] - step.state(x)[0]).abs()
            })
            .fold(0.0, f64::max);
    }
    libm::pow(crate::sum::pairwise(&terms), 1.0 / pw)
}
