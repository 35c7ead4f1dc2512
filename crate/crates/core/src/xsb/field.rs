//! Space-time fields on `[0, L)² × [0, T_win)` and their `(k, λ)` spectra.
//!
//! The time direction uses the same unitary convention as space:
//! `u(t) = T^{-1/2} Σ_λ û(λ) e^{iλt}` with `λ = 2πj/T_win`, so Parseval holds
//! at both levels and a free Schrödinger wave `e^{−i|k|²t}` sits at
//! `λ = −|k|²`.

use num_complex::Complex64;

use crate::error::{Result, ZakharovError};
use crate::fft::{fft_nd, signed_mode, storage_index};
use crate::spectral::{GridSpec, SpectralField2D};

/// Smooth cutoff `ψ_T`: raised-cosine flanks around a plateau of length `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub t_total: f64,
    pub flank_fraction: f64,
}

impl TimeWindow {
    pub fn new(t_total: f64, flank_fraction: f64) -> Result<Self> {
        if !(t_total > 0.0 && t_total.is_finite()) || !(flank_fraction > 0.0 && flank_fraction < 0.5) {
            return Err(ZakharovError::Config(format!(
                "window needs T > 0 and flank fraction in (0, 0.5), got T={t_total}, f={flank_fraction}"
            )));
        }
        Ok(TimeWindow { t_total, flank_fraction })
    }

    fn flank(&self) -> f64 {
        self.flank_fraction * self.t_total
    }

    /// Support length `T·(1 + 2·flank_fraction)`.
    pub fn t_window(&self) -> f64 {
        self.t_total + 2.0 * self.flank()
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.flank(), self.flank() + self.t_total)
    }

    pub fn value(&self, t: f64) -> f64 {
        let f = self.flank();
        let (lo, hi) = self.plateau();
        if t <= 0.0 || t >= self.t_window() {
            0.0
        } else if t < lo {
            0.5 * (1.0 - (std::f64::consts::PI * t / f).cos())
        } else if t <= hi {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (self.t_window() - t) / f).cos())
        }
    }
}

/// Shape of a space-time lattice: `n × n` spatial modes of period `L`, `m`
/// time samples over `T_win`. `n` need not be a power of two (padded lattices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub n: usize,
    pub period: f64,
    pub t_window: f64,
    pub m: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.m * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.m, self.n, self.n]
    }

    pub fn spatial_len(&self) -> usize {
        self.n * self.n
    }

    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    pub fn dlambda(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.t_window
    }

    /// `λ` of time-frequency position `j`.
    pub fn lambda(&self, j: usize) -> f64 {
        self.dlambda() * signed_mode(j, self.m) as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t_window * j as f64 / self.m as f64
    }

    /// Signed spatial modes of spatial position `s`.
    pub fn modes(&self, s: usize) -> (i64, i64) {
        (signed_mode(s / self.n, self.n), signed_mode(s % self.n, self.n))
    }

    pub fn wavevector(&self, s: usize) -> [f64; 2] {
        let (m1, m2) = self.modes(s);
        [self.dk() * m1 as f64, self.dk() * m2 as f64]
    }

    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.spatial_len())
            .map(|s| {
                let [a, b] = self.wavevector(s);
                a * a + b * b
            })
            .collect()
    }

    pub fn spatial_index(&self, m1: i64, m2: i64) -> usize {
        storage_index(m1, self.n) * self.n + storage_index(m2, self.n)
    }

    /// Cell volume `(L/n)²·(T_win/m)` of the physical quadrature.
    pub fn cell(&self) -> f64 {
        let h = self.period / self.n as f64;
        h * h * self.t_window / self.m as f64
    }

    fn forward_scale(&self) -> f64 {
        self.period / (self.n * self.n) as f64 * self.t_window.sqrt() / self.m as f64
    }

    fn inverse_scale(&self) -> f64 {
        1.0 / (self.period * self.t_window.sqrt())
    }
}

/// Time-major physical samples `u(x_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: GridSpec,
    t_window: f64,
    m_steps: usize,
    samples: Vec<Complex64>,
    windowed: bool,
}

/// Coefficients `û(k, λ)`, stored `[λ][k₁][k₂]` in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSpectrum {
    pub lattice: Lattice,
    pub coeffs: Vec<Complex64>,
    pub windowed: bool,
}

impl SpaceTimeField {
    pub fn new(grid: GridSpec, t_window: f64, m_steps: usize, samples: Vec<Complex64>) -> Result<Self> {
        if m_steps < 2 || !m_steps.is_power_of_two() {
            return Err(ZakharovError::Config(format!("m_steps must be a power of two >= 2, got {m_steps}")));
        }
        if !(t_window > 0.0 && t_window.is_finite()) {
            return Err(ZakharovError::Config(format!("time window must be positive, got {t_window}")));
        }
        let expected = grid.len() * m_steps;
        if samples.len() != expected {
            return Err(ZakharovError::Shape { expected, actual: samples.len() });
        }
        Ok(SpaceTimeField { grid, t_window, m_steps, samples, windowed: false })
    }

    /// Samples `f(x, y, t)` on the lattice.
    pub fn from_fn(
        grid: GridSpec,
        t_window: f64,
        m_steps: usize,
        f: impl Fn(f64, f64, f64) -> Complex64,
    ) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid.len() * m_steps);
        for j in 0..m_steps {
            let t = t_window * j as f64 / m_steps as f64;
            for i in 0..grid.len() {
                let [x, y] = grid.point(i);
                samples.push(f(x, y, t));
            }
        }
        Self::new(grid, t_window, m_steps, samples)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn t_window(&self) -> f64 {
        self.t_window
    }

    pub fn m_steps(&self) -> usize {
        self.m_steps
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn is_windowed(&self) -> bool {
        self.windowed
    }

    pub fn lattice(&self) -> Lattice {
        Lattice { n: self.grid.n(), period: self.grid.period(), t_window: self.t_window, m: self.m_steps }
    }

    /// Spatial slice at time index `j`.
    pub fn slice(&self, j: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.samples[j * len..(j + 1) * len]
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn spectrum(&self) -> SpaceTimeSpectrum {
        let lattice = self.lattice();
        let mut coeffs = self.samples.clone();
        fft_nd(&mut coeffs, &lattice.dims(), false);
        let scale = lattice.forward_scale();
        coeffs.iter_mut().for_each(|c| *c *= scale);
        SpaceTimeSpectrum { lattice, coeffs, windowed: self.windowed }
    }

    /// `( ∫∫ |u|² dx dt )^{1/2}` by the lattice quadrature.
    pub fn l2_norm(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.lattice().cell()).sqrt()
    }

    /// `( ∫∫ |u|⁴ dx dt )^{1/4}` by the lattice quadrature.
    pub fn l4_norm_quadrature(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr().powi(2)).sum::<f64>() * self.lattice().cell()).powf(0.25)
    }
}

impl SpaceTimeSpectrum {
    /// Physical samples on this spectrum's lattice.
    pub fn to_samples(&self) -> Vec<Complex64> {
        let mut samples = self.coeffs.clone();
        fft_nd(&mut samples, &self.lattice.dims(), true);
        let scale = self.lattice.inverse_scale();
        samples.iter_mut().for_each(|c| *c *= scale);
        samples
    }

    /// Back to a field; only for power-of-two spatial lattices.
    pub fn to_field(&self) -> Result<SpaceTimeField> {
        let grid = GridSpec::new(self.lattice.n, self.lattice.period, true)?;
        let mut field = SpaceTimeField::new(grid, self.lattice.t_window, self.lattice.m, self.to_samples())?;
        field.windowed = self.windowed;
        Ok(field)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Multiplies every coefficient by `|k|^σ` (`σ = 0` is the identity).
    pub fn apply_b(&self, sigma: f64) -> Self {
        if sigma == 0.0 {
            return self.clone();
        }
        let k2 = self.lattice.k_squared();
        let weights: Vec<f64> = k2.iter().map(|q| if *q == 0.0 { 0.0 } else { q.powf(0.5 * sigma) }).collect();
        let spatial = self.lattice.spatial_len();
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= weights[i % spatial];
        }
        out
    }

    /// Zero-padded copy on an `n_new × n_new` spatial lattice (same `L`, `λ`).
    pub fn embed(&self, n_new: usize) -> Self {
        assert!(n_new >= self.lattice.n);
        let old = self.lattice;
        let new = Lattice { n: n_new, ..old };
        let mut coeffs = vec![Complex64::new(0.0, 0.0); new.len()];
        for j in 0..old.m {
            for s in 0..old.spatial_len() {
                let (m1, m2) = old.modes(s);
                coeffs[j * new.spatial_len() + new.spatial_index(m1, m2)] = self.coeffs[j * old.spatial_len() + s];
            }
        }
        SpaceTimeSpectrum { lattice: new, coeffs, windowed: self.windowed }
    }

    /// Spectrum of given physical samples on `lattice`.
    pub fn from_samples(lattice: Lattice, samples: Vec<Complex64>, windowed: bool) -> Self {
        let mut coeffs = samples;
        fft_nd(&mut coeffs, &lattice.dims(), false);
        let scale = lattice.forward_scale();
        coeffs.iter_mut().for_each(|c| *c *= scale);
        SpaceTimeSpectrum { lattice, coeffs, windowed }
    }

    /// `Σ (1+|k|²)^s (1+|λ+|k|²|)^{2b} |û|²`, then the square root.
    pub fn xsb_norm(&self, s: f64, b: f64) -> f64 {
        let k2 = self.lattice.k_squared();
        let spatial = self.lattice.spatial_len();
        let mut acc = 0.0;
        for j in 0..self.lattice.m {
            let lambda = self.lattice.lambda(j);
            let row = &self.coeffs[j * spatial..(j + 1) * spatial];
            for (c, q) in row.iter().zip(&k2) {
                acc += (1.0 + q).powf(s) * (1.0 + (lambda + q).abs()).powf(2.0 * b) * c.norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Multiplies by `ψ_T` pointwise in time.
pub fn apply_window(field: &SpaceTimeField, window: &TimeWindow) -> Result<SpaceTimeField> {
    if (field.t_window - window.t_window()).abs() > 1e-12 * window.t_window() {
        return Err(ZakharovError::Contract(format!(
            "field spans {} but the window needs {}",
            field.t_window,
            window.t_window()
        )));
    }
    let mut out = field.clone();
    let len = field.grid.len();
    for j in 0..field.m_steps {
        let w = window.value(field.lattice().time(j));
        out.samples[j * len..(j + 1) * len].iter_mut().for_each(|v| *v *= w);
    }
    out.windowed = true;
    Ok(out)
}

/// `‖u‖_{X_{s,b}}` with the `(1+|k|²)^{1/2}` bracket; the field must be windowed.
pub fn xsb_norm(field: &SpaceTimeField, s: f64, b: f64) -> Result<f64> {
    if !field.windowed {
        return Err(ZakharovError::Contract("X_{s,b} norm of an unwindowed field".into()));
    }
    Ok(field.spectrum().xsb_norm(s, b))
}

/// Windowed free solution `ψ_T(t)·e^{itΔ}φ`, sampled on `m_steps` times.
pub fn free_solution(phi_hat: &SpectralField2D, window: &TimeWindow, m_steps: usize) -> Result<SpaceTimeField> {
    let zeros = vec![0.0; phi_hat.grid().len()];
    modulated_free_solution(phi_hat, &zeros, window, m_steps)
}

/// Like [`free_solution`] with each mode's frequency shifted by `μ_k`:
/// `e^{−i(|k|²+μ_k)t}`.
pub fn modulated_free_solution(
    phi_hat: &SpectralField2D,
    detuning: &[f64],
    window: &TimeWindow,
    m_steps: usize,
) -> Result<SpaceTimeField> {
    let grid = *phi_hat.grid();
    let t_window = window.t_window();
    let k2 = grid.k_squared();
    let mut samples = Vec::with_capacity(grid.len() * m_steps);
    for j in 0..m_steps {
        let t = t_window * j as f64 / m_steps as f64;
        let slice = phi_hat.map(|i, c| c * Complex64::from_polar(1.0, -(k2[i] + detuning[i]) * t));
        samples.extend(slice.to_physical());
    }
    let field = SpaceTimeField::new(grid, t_window, m_steps, samples)?;
    apply_window(&field, window)
}

/// Spectrum of [`modulated_free_solution`] without the spatial transforms:
/// each mode's time series `ψ(t)e^{−iωt}` is transformed on its own.
pub fn modulated_free_spectrum(
    phi_hat: &SpectralField2D,
    detuning: &[f64],
    window: &TimeWindow,
    m_steps: usize,
) -> Result<SpaceTimeSpectrum> {
    let grid = *phi_hat.grid();
    let lattice = Lattice { n: grid.n(), period: grid.period(), t_window: window.t_window(), m: m_steps };
    if m_steps < 2 || !m_steps.is_power_of_two() {
        return Err(ZakharovError::Config(format!("m_steps must be a power of two >= 2, got {m_steps}")));
    }
    let k2 = grid.k_squared();
    let psi: Vec<f64> = (0..m_steps).map(|j| window.value(lattice.time(j))).collect();
    let spatial = grid.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); lattice.len()];
    let mut series = vec![Complex64::new(0.0, 0.0); m_steps];
    let time_scale = window.t_window().sqrt() / m_steps as f64;
    for (s, c) in phi_hat.coeffs().iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let omega = k2[s] + detuning[s];
        for (j, v) in series.iter_mut().enumerate() {
            *v = Complex64::from_polar(psi[j], -omega * lattice.time(j));
        }
        fft_nd(&mut series, &[m_steps], false);
        for (j, v) in series.iter().enumerate() {
            coeffs[j * spatial + s] = c * v * time_scale;
        }
    }
    Ok(SpaceTimeSpectrum { lattice, coeffs, windowed: true })
}

/// Spectrum of the pointwise product `a·b` (with optional conjugations),
/// computed on a spatial lattice padded to `3n/2` so that products of fields
/// inside the 2/3 band are free of spatial aliasing.
pub fn padded_product(
    a: &SpaceTimeSpectrum,
    conj_a: bool,
    b: &SpaceTimeSpectrum,
    conj_b: bool,
) -> Result<SpaceTimeSpectrum> {
    if a.lattice != b.lattice {
        return Err(ZakharovError::GridMismatch("space-time lattices differ".into()));
    }
    let n_pad = padded_size(a.lattice.n);
    let pa = a.embed(n_pad).to_samples();
    let pb = b.embed(n_pad).to_samples();
    let prod: Vec<Complex64> = pa
        .iter()
        .zip(&pb)
        .map(|(x, y)| {
            let x = if conj_a { x.conj() } else { *x };
            let y = if conj_b { y.conj() } else { *y };
            x * y
        })
        .collect();
    let lattice = Lattice { n: n_pad, ..a.lattice };
    Ok(SpaceTimeSpectrum::from_samples(lattice, prod, a.windowed && b.windowed))
}

/// Smallest even size `≥ 3n/2`.
pub fn padded_size(n: usize) -> usize {
    let p = (3 * n).div_ceil(2);
    p + p % 2
}
