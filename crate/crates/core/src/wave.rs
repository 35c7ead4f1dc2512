//! Exact Fourier-side wave machinery.
//!
//! Every lattice mode of `n_tt = Δn + ΔG` with `G` frozen is a harmonic
//! oscillator with frequency `|k|`, so the free propagator `W(a,b)`, the
//! frozen-forcing step and the Duhamel operator are all applied per mode in
//! closed form.

use num_complex::Complex64;

use crate::error::{Result, ZakharovError};
use crate::spectral::{GridSpec, SpectralField2D};

/// Tolerance on the `k = 0` coefficient of a mean-free field, relative to its norm.
pub const MEAN_FREE_TOL: f64 = 1e-10;

/// `(n̂, n̂ₜ)` of a real wave field.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub n_hat: SpectralField2D,
    pub ndot_hat: SpectralField2D,
}

impl WaveState {
    pub fn new(n_hat: SpectralField2D, ndot_hat: SpectralField2D) -> Result<Self> {
        if n_hat.grid() != ndot_hat.grid() {
            return Err(ZakharovError::GridMismatch("wave fields live on different grids".into()));
        }
        Ok(WaveState { n_hat, ndot_hat })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        WaveState { n_hat: SpectralField2D::zeros(grid), ndot_hat: SpectralField2D::zeros(grid) }
    }

    pub fn grid(&self) -> &GridSpec {
        self.n_hat.grid()
    }

    /// Checks Hermitian symmetry of both fields and that `ṅ` is mean-free.
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [("n", &self.n_hat), ("ndot", &self.ndot_hat)] {
            let defect = f.hermitian_defect();
            if defect > 1e-12 {
                return Err(ZakharovError::Contract(format!(
                    "wave field {name} is not real-valued (Hermitian defect {defect:.3e})"
                )));
            }
        }
        check_mean_free(&self.ndot_hat)
    }

    pub fn add(&self, other: &WaveState) -> Result<WaveState> {
        Ok(WaveState { n_hat: self.n_hat.add(&other.n_hat)?, ndot_hat: self.ndot_hat.add(&other.ndot_hat)? })
    }

    pub fn sub(&self, other: &WaveState) -> Result<WaveState> {
        Ok(WaveState { n_hat: self.n_hat.sub(&other.n_hat)?, ndot_hat: self.ndot_hat.sub(&other.ndot_hat)? })
    }

    pub fn is_finite(&self) -> bool {
        self.n_hat.is_finite() && self.ndot_hat.is_finite()
    }
}

pub(crate) fn check_mean_free(f: &SpectralField2D) -> Result<()> {
    let mean = f.mean_coeff().norm();
    let tolerance = MEAN_FREE_TOL * f.l2_norm();
    if mean > tolerance {
        return Err(ZakharovError::NotMeanFree { mean, tolerance });
    }
    Ok(())
}

/// Per-mode rotation by time `t`, precomputed for repeated use.
#[derive(Debug, Clone)]
pub struct WaveRotation {
    grid: GridSpec,
    t: f64,
    cos: Vec<f64>,
    /// `sin(|k|t)/|k|`, equal to `t` at `k = 0`.
    sinc: Vec<f64>,
    /// `|k|·sin(|k|t)`.
    ksin: Vec<f64>,
}

impl WaveRotation {
    pub fn new(grid: GridSpec, t: f64) -> Self {
        let kabs = grid.k_abs();
        let mut cos = Vec::with_capacity(kabs.len());
        let mut sinc = Vec::with_capacity(kabs.len());
        let mut ksin = Vec::with_capacity(kabs.len());
        for &k in &kabs {
            if k == 0.0 {
                cos.push(1.0);
                sinc.push(t);
                ksin.push(0.0);
            } else {
                let (s, c) = (k * t).sin_cos();
                cos.push(c);
                sinc.push(s / k);
                ksin.push(k * s);
            }
        }
        WaveRotation { grid, t, cos, sinc, ksin }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Applies the free propagator in place.
    pub fn apply(&self, n_hat: &mut [Complex64], ndot_hat: &mut [Complex64]) {
        for i in 0..n_hat.len() {
            let n0 = n_hat[i];
            let v0 = ndot_hat[i];
            n_hat[i] = self.cos[i] * n0 + self.sinc[i] * v0;
            ndot_hat[i] = -self.ksin[i] * n0 + self.cos[i] * v0;
        }
    }

    /// Applies the free propagator to `(n̂ + Ĝ, n̂ₜ)` and subtracts `Ĝ`.
    ///
    /// Exact for `n_tt = Δ(n + G)` with `G` constant; the `k = 0` mode has no
    /// restoring force and `G` drops out there.
    pub fn apply_forced(&self, n_hat: &mut [Complex64], ndot_hat: &mut [Complex64], g_hat: &[Complex64]) {
        for i in 0..n_hat.len() {
            let g = if i == 0 { Complex64::new(0.0, 0.0) } else { g_hat[i] };
            let m0 = n_hat[i] + g;
            let v0 = ndot_hat[i];
            n_hat[i] = self.cos[i] * m0 + self.sinc[i] * v0 - g;
            ndot_hat[i] = -self.ksin[i] * m0 + self.cos[i] * v0;
        }
    }

    fn check(&self, grid: &GridSpec) -> Result<()> {
        if &self.grid != grid {
            return Err(ZakharovError::GridMismatch("rotation built for another grid".into()));
        }
        Ok(())
    }
}

/// Free wave propagation `W(a,b)(t)` of a wave state.
pub fn free_wave_propagate(w: &WaveState, t: f64) -> WaveState {
    let rot = WaveRotation::new(*w.grid(), t);
    let mut out = w.clone();
    rot.apply(out.n_hat.coeffs_mut(), out.ndot_hat.coeffs_mut());
    out
}

/// Exact step of `n_tt = Δn + ΔG` over `dt` with `Ĝ` (the transform of `|u|²`) frozen.
pub fn forced_oscillator_step(w: &WaveState, g_hat: &SpectralField2D, dt: f64) -> Result<WaveState> {
    if !dt.is_finite() {
        return Err(ZakharovError::Argument(format!("non-finite step {dt}")));
    }
    let rot = WaveRotation::new(*w.grid(), dt);
    forced_step_with(&rot, w, g_hat)
}

pub(crate) fn forced_step_with(rot: &WaveRotation, w: &WaveState, g_hat: &SpectralField2D) -> Result<WaveState> {
    rot.check(w.grid())?;
    rot.check(g_hat.grid())?;
    let mut out = w.clone();
    rot.apply_forced(out.n_hat.coeffs_mut(), out.ndot_hat.coeffs_mut(), g_hat.coeffs());
    Ok(out)
}

/// Zero-data solution of `□n = ΔG` at time `t`, with `G` piecewise constant on
/// steps of length `dt` and equal on step `j` to `history[j]` (midpoint samples).
pub fn duhamel_boxinv(history: &[SpectralField2D], dt: f64, t: f64) -> Result<WaveState> {
    if !(dt > 0.0 && dt.is_finite()) || !(t >= 0.0) {
        return Err(ZakharovError::Argument(format!("need dt > 0 and t >= 0, got dt={dt}, t={t}")));
    }
    let steps = (t / dt).round() as usize;
    if ((steps as f64) * dt - t).abs() > 1e-9 * t.max(dt) {
        return Err(ZakharovError::Argument(format!("t={t} is not a multiple of dt={dt}")));
    }
    if history.len() < steps {
        return Err(ZakharovError::Argument(format!(
            "history holds {} steps but t={t} needs {steps}",
            history.len()
        )));
    }
    let Some(first) = history.first() else {
        return Err(ZakharovError::Argument("empty forcing history".into()));
    };
    let grid = *first.grid();
    let rot = WaveRotation::new(grid, dt);
    let mut w = WaveState::zeros(grid);
    for g in &history[..steps] {
        w = forced_step_with(&rot, &w, g)?;
    }
    Ok(w)
}

/// How the `±` of the cone weight is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPolicy {
    /// `min(|λ − |k||, |λ + |k||)`.
    NearestCone,
    /// Distance to `λ = +|k|` only.
    Plus,
    /// Distance to `λ = −|k|` only.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeWeightSpec {
    pub alpha: f64,
    pub sign_policy: SignPolicy,
    pub include_trace_term: bool,
}

impl ConeWeightSpec {
    pub fn new(alpha: f64) -> Self {
        ConeWeightSpec { alpha, sign_policy: SignPolicy::NearestCone, include_trace_term: true }
    }

    pub fn without_trace(mut self) -> Self {
        self.include_trace_term = false;
        self
    }

    /// Distance from `λ` to the selected cone sheet and the sheet's `λ` value.
    pub fn cone_distance(&self, k_abs: f64, lambda: f64) -> (f64, f64) {
        let to_plus = (lambda - k_abs).abs();
        let to_minus = (lambda + k_abs).abs();
        match self.sign_policy {
            SignPolicy::Plus => (to_plus, k_abs),
            SignPolicy::Minus => (to_minus, -k_abs),
            SignPolicy::NearestCone => {
                if to_minus <= to_plus {
                    (to_minus, -k_abs)
                } else {
                    (to_plus, k_abs)
                }
            }
        }
    }
}

/// `( |k| / (1 + dist(λ, cone)) )^α`.
pub fn cone_weight(k: [f64; 2], lambda: f64, spec: &ConeWeightSpec) -> f64 {
    let k_abs = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let (dist, _) = spec.cone_distance(k_abs, lambda);
    (k_abs / (1.0 + dist)).powf(spec.alpha)
}

/// `‖b‖_{Ĥ⁻¹} = ( Σ_{k≠0} |b̂(k)|²/|k|² )^{1/2}`; `b` must be mean-free.
pub fn hhat_minus1_norm(b_hat: &SpectralField2D) -> Result<f64> {
    check_mean_free(b_hat)?;
    let k2 = b_hat.grid().k_squared();
    Ok(b_hat
        .coeffs()
        .iter()
        .zip(&k2)
        .skip(1)
        .map(|(c, q)| c.norm_sqr() / q)
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField2D;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI, true).unwrap()
    }

    fn random_real(grid: GridSpec, seed: u64, mean_free: bool) -> SpectralField2D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = RealField2D::from_fn(grid, |_, _| rng.gen_range(-1.0..1.0)).to_spectral();
        if mean_free {
            f.map(|i, c| if i == 0 { Complex64::new(0.0, 0.0) } else { c })
        } else {
            f
        }
    }

    fn random_wave(seed: u64) -> WaveState {
        let g = grid();
        WaveState::new(random_real(g, seed, false), random_real(g, seed + 1, true)).unwrap()
    }

    /// Classical RK4 on one oscillator mode `y'' = −ω²(y + g)`.
    fn rk4_mode(y0: Complex64, v0: Complex64, omega: f64, g: Complex64, t: f64, steps: usize) -> (Complex64, Complex64) {
        let h = t / steps as f64;
        let f = |y: Complex64, v: Complex64| (v, -omega * omega * (y + g));
        let (mut y, mut v) = (y0, v0);
        for _ in 0..steps {
            let (a1, b1) = f(y, v);
            let (a2, b2) = f(y + 0.5 * h * a1, v + 0.5 * h * b1);
            let (a3, b3) = f(y + 0.5 * h * a2, v + 0.5 * h * b2);
            let (a4, b4) = f(y + h * a3, v + h * b3);
            y += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        (y, v)
    }

    #[test]
    fn standing_wave() {
        let g = grid();
        let a = RealField2D::from_fn(g, |x, y| (3.0 * x + 4.0 * y).cos()).to_spectral();
        let w = WaveState::new(a, SpectralField2D::zeros(g)).unwrap();
        for t in [0.0, 0.3, 1.7] {
            let out = free_wave_propagate(&w, t).n_hat.to_real();
            for (i, v) in out.values().iter().enumerate() {
                let [x, y] = g.point(i);
                assert!((v - (5.0 * t).cos() * (3.0 * x + 4.0 * y).cos()).abs() < 1e-12);
            }
        }
        assert_eq!(free_wave_propagate(&w, 0.0), w);
    }

    #[test]
    fn per_mode_energy_is_invariant() {
        let w = random_wave(11);
        let k2 = grid().k_squared();
        let energy = |s: &WaveState| -> Vec<f64> {
            (1..k2.len()).map(|i| s.ndot_hat.coeffs()[i].norm_sqr() / k2[i] + s.n_hat.coeffs()[i].norm_sqr()).collect()
        };
        let e0 = energy(&w);
        let e1 = energy(&free_wave_propagate(&w, 2.3));
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).abs() <= 1e-12 * a.max(1e-3));
        }
    }

    #[test]
    fn propagation_is_a_group() {
        let w = random_wave(5);
        let two_step = free_wave_propagate(&free_wave_propagate(&w, 0.7), 1.9);
        let one_step = free_wave_propagate(&w, 2.6);
        let diff = two_step.sub(&one_step).unwrap();
        let scale = one_step.n_hat.l2_norm() + one_step.ndot_hat.l2_norm();
        assert!(diff.n_hat.l2_norm() + diff.ndot_hat.l2_norm() <= 1e-11 * scale);
        two_step.validate().unwrap();
    }

    #[test]
    fn forced_step_zero_is_zero() {
        let g = grid();
        let out = forced_oscillator_step(&WaveState::zeros(g), &SpectralField2D::zeros(g), 0.4).unwrap();
        assert_eq!(out, WaveState::zeros(g));
        assert!(forced_oscillator_step(&WaveState::zeros(g), &SpectralField2D::zeros(g), f64::NAN).is_err());
    }

    #[test]
    fn constant_forcing_closed_form() {
        // n_tt + |k₀|² n = F̂ with F = ΔG, i.e. F̂ = −|k₀|² Ĝ; zero data gives
        // n̂(t) = (F̂/|k₀|²)(1 − cos|k₀|t)
        let g = grid();
        let amp = Complex64::new(0.8, -0.3);
        let k0sq = 5.0; // mode (1, 2)
        let g_hat = SpectralField2D::single_mode(g, 1, 2, -amp / k0sq);
        for t in [0.25, 1.0, 3.3] {
            let w = forced_oscillator_step(&WaveState::zeros(g), &g_hat, t).unwrap();
            let want = amp / k0sq * (1.0 - (k0sq.sqrt() * t).cos());
            assert!((w.n_hat.coeff(1, 2) - want).norm() < 1e-13);
            let (y, _) = rk4_mode(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), k0sq.sqrt(), -amp / k0sq, t, 4000);
            assert!((w.n_hat.coeff(1, 2) - y).norm() < 1e-10);
        }
    }

    #[test]
    fn forced_step_matches_rk4_per_mode() {
        let w = random_wave(21);
        let g_hat = random_real(grid(), 40, false);
        let dt = 0.9;
        let out = forced_oscillator_step(&w, &g_hat, dt).unwrap();
        let kabs = grid().k_abs();
        for i in 0..kabs.len() {
            let forcing = if i == 0 { Complex64::new(0.0, 0.0) } else { g_hat.coeffs()[i] };
            let (y, v) = rk4_mode(w.n_hat.coeffs()[i], w.ndot_hat.coeffs()[i], kabs[i], forcing, dt, 2000);
            assert!((out.n_hat.coeffs()[i] - y).norm() < 1e-9, "mode {i}");
            assert!((out.ndot_hat.coeffs()[i] - v).norm() < 1e-9, "mode {i}");
        }
        out.validate().unwrap();
    }

    #[test]
    fn duhamel_consistency() {
        let g = grid();
        let g_hat = random_real(g, 3, false);
        let dt = 0.05;
        let zero = duhamel_boxinv(&vec![SpectralField2D::zeros(g); 10], dt, 0.5).unwrap();
        assert_eq!(zero, WaveState::zeros(g));
        let chained = duhamel_boxinv(&vec![g_hat.clone(); 20], dt, 1.0).unwrap();
        let once = forced_oscillator_step(&WaveState::zeros(g), &g_hat, 1.0).unwrap();
        let diff = chained.sub(&once).unwrap();
        assert!(diff.n_hat.l2_norm() + diff.ndot_hat.l2_norm() < 1e-12 * (once.n_hat.l2_norm() + 1.0));
        assert!(duhamel_boxinv(&vec![g_hat; 5], dt, 1.0).is_err());
    }

    #[test]
    fn duhamel_polynomial_forcing_against_quadrature() {
        // G = g(τ)·e^{ik₀·x}/L with g(τ) = 1 + 2τ − τ²; the zero-data solution is
        // n̂(t) = ∫₀ᵗ sin(|k₀|(t−τ))/|k₀| · (−|k₀|²) g(τ) dτ
        let grid = grid();
        let k0 = 2f64.sqrt(); // mode (1, 1)
        let gpoly = |tau: f64| 1.0 + 2.0 * tau - tau * tau;
        let t = 1.5;
        let exact = {
            // composite Simpson, 20000 panels
            let m = 20000;
            let h = t / m as f64;
            let f = |tau: f64| (k0 * (t - tau)).sin() / k0 * (-k0 * k0) * gpoly(tau);
            let mut acc = f(0.0) + f(t);
            for j in 1..m {
                acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(j as f64 * h);
            }
            acc * h / 3.0
        };
        let mut errors = Vec::new();
        for steps in [50usize, 100, 200] {
            let dt = t / steps as f64;
            let history: Vec<SpectralField2D> = (0..steps)
                .map(|j| SpectralField2D::single_mode(grid, 1, 1, Complex64::new(gpoly((j as f64 + 0.5) * dt), 0.0)))
                .collect();
            let w = duhamel_boxinv(&history, dt, t).unwrap();
            errors.push((w.n_hat.coeff(1, 1).re - exact).abs());
        }
        assert!(errors[2] < 1e-4);
        for pair in errors.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!((3.5..4.5).contains(&ratio), "midpoint quadrature ratio {ratio}");
        }
    }

    #[test]
    fn cone_weight_values() {
        let on_cone = ConeWeightSpec::new(1.0);
        assert!((cone_weight([4.0, 0.0], 4.0, &on_cone) - 4.0).abs() < 1e-15);
        assert!((cone_weight([0.0, -4.0], -4.0, &on_cone) - 4.0).abs() < 1e-15);
        let half = ConeWeightSpec::new(0.5);
        assert!((cone_weight([1.0, 0.0], 0.0, &half) - 0.5f64.sqrt()).abs() < 1e-15);
        // nonincreasing in the distance to the nearest cone
        let k = [3.0, 4.0];
        let mut prev = f64::INFINITY;
        for j in 0..200 {
            let lambda = 5.0 + 0.1 * j as f64;
            let w = cone_weight(k, lambda, &on_cone);
            assert!(w <= prev);
            assert!(w <= 5.0 + 1e-15);
            prev = w;
        }
    }

    #[test]
    fn hhat_norm_equals_l2_of_potential() {
        // b = ∇·V with V = (sin x, 0) ⇒ b = cos x
        let g = grid();
        let b = RealField2D::from_fn(g, |x, _| x.cos()).to_spectral();
        // assemble V spectrally: V̂ = −i k b̂ / |k|²
        let k2 = g.k_squared();
        let mut vx = SpectralField2D::zeros(g);
        let mut vy = SpectralField2D::zeros(g);
        for i in 1..g.len() {
            let [kx, ky] = g.wavevector(i);
            let c = -Complex64::i() * b.coeffs()[i] / k2[i];
            vx.coeffs_mut()[i] = c * kx;
            vy.coeffs_mut()[i] = c * ky;
        }
        let v_norm = (vx.l2_norm_sqr() + vy.l2_norm_sqr()).sqrt();
        let direct = RealField2D::from_fn(g, |x, _| x.sin()).to_spectral().l2_norm();
        assert!((v_norm - direct).abs() < 1e-12);
        let norm = hhat_minus1_norm(&b).unwrap();
        assert!((norm - v_norm).abs() < 1e-12 * v_norm);
        assert!((hhat_minus1_norm(&b.scale(-2.5)).unwrap() - 2.5 * norm).abs() < 1e-12);

        let constant = RealField2D::from_fn(g, |_, _| 0.7).to_spectral();
        assert!(matches!(hhat_minus1_norm(&constant), Err(ZakharovError::NotMeanFree { .. })));
    }
}
