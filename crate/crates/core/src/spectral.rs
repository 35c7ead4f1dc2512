//! Fourier representation of fields on the periodic square torus `[0, L)²`.
//!
//! Coefficients use the unitary Fourier-series convention
//!
//! ```text
//! f(x) = (1/L) Σ_k f̂(k) e^{ik·x},    f̂(k) = (L/N²) Σ_j f(x_j) e^{-ik·x_j}
//! ```
//!
//! so that the discrete Parseval identity `(L/N)² Σ_j f·ḡ = Σ_k f̂·conj(ĝ)`
//! holds exactly. Coefficients are stored in FFT order, row-major over the
//! two axes, and the lattice is `k = 2π m / L` with `m ∈ [-N/2, N/2)`.

use num_complex::Complex64;

use crate::error::{Result, ZakharovError};
use crate::fft::{fft_nd, signed_mode, storage_index};

/// Default torus period, `32π`.
pub const DEFAULT_PERIOD: f64 = 32.0 * std::f64::consts::PI;

/// Grid on the periodic square torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    period: f64,
    dealias: bool,
}

impl GridSpec {
    pub fn new(n: usize, period: f64, dealias: bool) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(ZakharovError::Config(format!(
                "grid n_points must be a power of two >= 8, got {n}"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(ZakharovError::Config(format!("grid period must be positive, got {period}")));
        }
        Ok(GridSpec { n, period, dealias })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias_enabled(&self) -> bool {
        self.dealias
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    /// Number of lattice points, `N²`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical grid spacing `L/N`.
    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Wavenumber spacing `2π/L`.
    pub fn dk(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Signed lattice indices `(m₁, m₂)` of storage position `idx`.
    pub fn modes(&self, idx: usize) -> (i64, i64) {
        (signed_mode(idx / self.n, self.n), signed_mode(idx % self.n, self.n))
    }

    /// Wavevector of storage position `idx`.
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        let (m1, m2) = self.modes(idx);
        let dk = self.dk();
        [dk * m1 as f64, dk * m2 as f64]
    }

    /// Storage position of lattice point `(m₁, m₂)`, wrapped onto the lattice.
    pub fn index_of(&self, m1: i64, m2: i64) -> usize {
        storage_index(m1, self.n) * self.n + storage_index(m2, self.n)
    }

    /// `|k|²` for every storage position.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let [kx, ky] = self.wavevector(i);
                kx * kx + ky * ky
            })
            .collect()
    }

    /// `|k|` for every storage position.
    pub fn k_abs(&self) -> Vec<f64> {
        self.k_squared().into_iter().map(f64::sqrt).collect()
    }

    /// Physical collocation point `x_j` of storage position `idx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        [h * (idx / self.n) as f64, h * (idx % self.n) as f64]
    }

    /// Whether the 2/3-rule keeps lattice point `idx`.
    pub fn in_dealias_band(&self, idx: usize) -> bool {
        let (m1, m2) = self.modes(idx);
        let limit = self.n as f64 / 3.0;
        (m1.abs() as f64) <= limit && (m2.abs() as f64) <= limit
    }

    fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n || self.period != other.period {
            return Err(ZakharovError::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.period, other.n, other.period
            )));
        }
        Ok(())
    }
}

/// Complex Fourier coefficients of a field on the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2D {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

/// Real samples at the collocation points.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField2D {
    grid: GridSpec,
    values: Vec<f64>,
}

impl RealField2D {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(ZakharovError::Shape { expected: grid.len(), actual: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ZakharovError::Argument(format!("non-finite sample {v}")));
        }
        Ok(RealField2D { grid, values })
    }

    /// Samples `f(x_j)` of a function of position.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.point(i);
                f(x, y)
            })
            .collect();
        RealField2D { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_spectral(&self) -> SpectralField2D {
        let samples: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        forward(self.grid, &samples).expect("shape checked at construction")
    }
}

/// Forward transform of complex physical samples.
pub fn forward(grid: GridSpec, samples: &[Complex64]) -> Result<SpectralField2D> {
    if samples.len() != grid.len() {
        return Err(ZakharovError::Shape { expected: grid.len(), actual: samples.len() });
    }
    let mut coeffs = samples.to_vec();
    fft_nd(&mut coeffs, &[grid.n, grid.n], false);
    let scale = grid.period / (grid.n * grid.n) as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(SpectralField2D { grid, coeffs })
}

/// Inverse transform back to complex physical samples.
pub fn inverse(field: &SpectralField2D) -> Vec<Complex64> {
    let mut samples = field.coeffs.clone();
    fft_nd(&mut samples, &[field.grid.n, field.grid.n], true);
    let scale = 1.0 / field.grid.period;
    samples.iter_mut().for_each(|c| *c *= scale);
    samples
}

/// `⟨f, g⟩ = (L/N)² Σ_j f(x_j)·conj(g(x_j))`.
pub fn physical_inner(grid: &GridSpec, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let h = grid.spacing();
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum::<Complex64>() * (h * h)
}

impl SpectralField2D {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField2D { grid, coeffs: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(ZakharovError::Shape { expected: grid.len(), actual: coeffs.len() });
        }
        Ok(SpectralField2D { grid, coeffs })
    }

    /// A single lattice mode `amplitude · e^{ik·x}/L` at `(m₁, m₂)`.
    pub fn single_mode(grid: GridSpec, m1: i64, m2: i64, amplitude: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        let idx = grid.index_of(m1, m2);
        f.coeffs[idx] = amplitude;
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, m1: i64, m2: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(m1, m2)]
    }

    /// Coefficient of the `k = 0` mode.
    pub fn mean_coeff(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn to_physical(&self) -> Vec<Complex64> {
        inverse(self)
    }

    /// Real part of the physical samples; meaningful for Hermitian fields.
    pub fn to_real(&self) -> RealField2D {
        let values = inverse(self).into_iter().map(|c| c.re).collect();
        RealField2D { grid: self.grid, values }
    }

    /// `Σ_k f̂(k)·conj(ĝ(k))`.
    pub fn inner(&self, other: &SpectralField2D) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b.conj()).sum())
    }

    pub fn l2_norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sqr().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map(|_, c| c * factor)
    }

    /// Coefficient-wise map with the storage index.
    pub fn map(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect();
        SpectralField2D { grid: self.grid, coeffs }
    }

    pub fn add(&self, other: &SpectralField2D) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(self.map(|i, c| c + other.coeffs[i]))
    }

    pub fn sub(&self, other: &SpectralField2D) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(self.map(|i, c| c - other.coeffs[i]))
    }

    /// Fourier multiplier `B^σ = |k|^σ` with `B = √(−Δ)`.
    ///
    /// For `σ > 0` the `k = 0` coefficient becomes zero; `σ = 0` is the
    /// identity; `σ < 0` requires a vanishing mean.
    pub fn apply_b(&self, sigma: f64) -> Result<Self> {
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        if sigma < 0.0 && self.coeffs[0] != Complex64::new(0.0, 0.0) {
            return Err(ZakharovError::SingularMode { sigma, magnitude: self.coeffs[0].norm() });
        }
        let k2 = self.grid.k_squared();
        Ok(self.map(|i, c| if i == 0 { Complex64::new(0.0, 0.0) } else { c * k2[i].powf(0.5 * sigma) }))
    }

    /// Laplacian, `−|k|²·f̂`.
    pub fn laplacian(&self) -> Self {
        let k2 = self.grid.k_squared();
        self.map(|i, c| -c * k2[i])
    }

    /// `( Σ_k (1+|k|²)^s |f̂(k)|² )^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let k2 = self.grid.k_squared();
        self.coeffs
            .iter()
            .zip(&k2)
            .map(|(c, q)| (1.0 + q).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// 2/3-rule truncation: zero every mode with `max(|m₁|,|m₂|) > N/3`.
    pub fn dealias(&self) -> Self {
        self.map(|i, c| if self.grid.in_dealias_band(i) { c } else { Complex64::new(0.0, 0.0) })
    }

    /// Largest `|f̂(−k) − conj(f̂(k))|`, relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n;
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() {
            let (m1, m2) = self.grid.modes(i);
            let j = storage_index(-m1, n) * n + storage_index(-m2, n);
            worst = worst.max((self.coeffs[j] - self.coeffs[i].conj()).norm());
        }
        worst / scale
    }

    /// Restores exact Hermitian symmetry by averaging conjugate pairs.
    pub fn symmetrize(&self) -> Self {
        let n = self.grid.n;
        self.map(|i, c| {
            let (m1, m2) = self.grid.modes(i);
            let j = storage_index(-m1, n) * n + storage_index(-m2, n);
            0.5 * (c + self.coeffs[j].conj())
        })
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_samples(grid: &GridSpec, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(4, 1.0, true).is_err());
        assert!(GridSpec::new(24, 1.0, true).is_err());
        assert!(GridSpec::new(16, 0.0, true).is_err());
        assert!(GridSpec::new(16, 2.0 * PI, true).is_ok());
    }

    #[test]
    fn constant_field_lives_on_zero_mode() {
        let grid = GridSpec::new(16, 2.0 * PI, true).unwrap();
        let one = RealField2D::from_fn(grid, |_, _| 1.0).to_spectral();
        for (i, c) in one.coeffs().iter().enumerate() {
            if i == 0 {
                assert!((c.re - 2.0 * PI).abs() < 1e-12);
            } else {
                assert!(c.norm() < 1e-12);
            }
        }
        assert!((one.l2_norm_sqr() - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval() {
        for n in [8usize, 16, 32] {
            let grid = GridSpec::new(n, 5.0, true).unwrap();
            let f = random_samples(&grid, n as u64);
            let g = random_samples(&grid, 100 + n as u64);
            let fh = forward(grid, &f).unwrap();
            let gh = forward(grid, &g).unwrap();
            let back = fh.to_physical();
            let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
            for (a, b) in back.iter().zip(&f) {
                assert!((a - b).norm() <= 1e-12 * scale);
            }
            // both sides summed directly
            let phys = physical_inner(&grid, &f, &g);
            let spec: Complex64 = fh.coeffs().iter().zip(gh.coeffs()).map(|(a, b)| a * b.conj()).sum();
            assert!((phys - spec).norm() <= 1e-12 * phys.norm().max(1.0));
        }
    }

    #[test]
    fn shape_mismatch_is_a_configuration_error() {
        let grid = GridSpec::new(8, 1.0, true).unwrap();
        let err = forward(grid, &[Complex64::new(0.0, 0.0); 10]).unwrap_err();
        assert!(matches!(err, ZakharovError::Shape { .. }));
    }

    #[test]
    fn real_fields_are_hermitian() {
        let grid = GridSpec::new(16, 3.0, true).unwrap();
        let f = RealField2D::from_fn(grid, |x, y| (x * 2.1).sin() + (x * y).cos() * 0.3).to_spectral();
        assert!(f.hermitian_defect() < 1e-12);
    }

    #[test]
    fn b_on_plane_wave() {
        let grid = GridSpec::new(16, 2.0 * PI, true).unwrap();
        let f = SpectralField2D::single_mode(grid, 3, -2, Complex64::new(0.5, 0.25));
        let g = f.apply_b(2.0).unwrap();
        assert!((g.coeff(3, -2) - f.coeff(3, -2) * 13.0).norm() < 1e-12);
        assert_eq!(f.apply_b(0.0).unwrap(), f);
    }

    #[test]
    fn b_zero_mode_rules() {
        let grid = GridSpec::new(8, 2.0 * PI, true).unwrap();
        let f = SpectralField2D::single_mode(grid, 0, 0, Complex64::new(1.0, 0.0));
        assert_eq!(f.apply_b(1.0).unwrap().mean_coeff(), Complex64::new(0.0, 0.0));
        assert!(matches!(f.apply_b(-1.0), Err(ZakharovError::SingularMode { .. })));
        let g = SpectralField2D::single_mode(grid, 1, 0, Complex64::new(1.0, 0.0));
        assert!((g.apply_b(-1.0).unwrap().coeff(1, 0).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn b_squared_matches_finite_difference_laplacian() {
        // band-limited field; −Δ by the 5-point stencil, error O(h²)
        let f = |x: f64, y: f64| (x + 2.0 * y).sin() + 0.5 * (3.0 * x).cos() * y.sin();
        let minus_lap = |x: f64, y: f64| 5.0 * (x + 2.0 * y).sin() + 0.5 * 10.0 * (3.0 * x).cos() * y.sin();
        let mut errors = Vec::new();
        for n in [16usize, 32, 64] {
            let grid = GridSpec::new(n, 2.0 * PI, false).unwrap();
            let h = grid.spacing();
            let fd = RealField2D::from_fn(grid, |x, y| {
                (4.0 * f(x, y) - f(x + h, y) - f(x - h, y) - f(x, y + h) - f(x, y - h)) / (h * h)
            });
            let spectral = RealField2D::from_fn(grid, f).to_spectral().apply_b(2.0).unwrap().to_real();
            let err = spectral
                .values()
                .iter()
                .zip(fd.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // the spectral value is exact for this band-limited field
            let exact_err = spectral
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let [x, y] = grid.point(i);
                    (v - minus_lap(x, y)).abs()
                })
                .fold(0.0, f64::max);
            assert!(exact_err < 1e-10);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "halving h gave ratio {ratio}");
        }
    }

    #[test]
    fn b_powers_compose() {
        let grid = GridSpec::new(16, 7.0, true).unwrap();
        let f = forward(grid, &random_samples(&grid, 3)).unwrap();
        for (a, b) in [(0.5, 1.5), (1.0, 2.0), (0.0, 3.0)] {
            let lhs = f.apply_b(a).unwrap().apply_b(b).unwrap();
            let rhs = f.apply_b(a + b).unwrap();
            let scale = rhs.l2_norm();
            assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn sobolev_norm_values() {
        let grid = GridSpec::new(16, 2.0 * PI, true).unwrap();
        let f = forward(grid, &random_samples(&grid, 9)).unwrap();
        assert!((f.sobolev_norm(0.0) - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let single = SpectralField2D::single_mode(grid, 2, 1, Complex64::new(3.0, 0.0));
        for s in [0.0, 1.0, 2.5] {
            let expected = 3.0 * (1.0f64 + 5.0).powf(s / 2.0);
            assert!((single.sobolev_norm(s) - expected).abs() < 1e-12 * expected);
        }
        let norms: Vec<f64> = [0.0, 1.0, 2.0, 4.0].iter().map(|&s| f.sobolev_norm(s)).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn dealias_truncates_and_is_idempotent() {
        let grid = GridSpec::new(16, 2.0 * PI, true).unwrap();
        let f = forward(grid, &random_samples(&grid, 4)).unwrap();
        let once = f.dealias();
        assert_eq!(once.dealias(), once);
        let inside = SpectralField2D::single_mode(grid, 5, -5, Complex64::new(1.0, 1.0));
        assert_eq!(inside.dealias(), inside);
        let outside = SpectralField2D::single_mode(grid, 6, 0, Complex64::new(1.0, 1.0));
        assert_eq!(outside.dealias().l2_norm(), 0.0);
    }

    #[test]
    fn dealiased_product_matches_padded_convolution() {
        // modes 5 and 4 sum to 9, which wraps to −7 on a 16-point axis
        let grid = GridSpec::new(16, 2.0 * PI, true).unwrap();
        let a = SpectralField2D::single_mode(grid, 5, 1, Complex64::new(1.0, 0.0));
        let b = SpectralField2D::single_mode(grid, 4, 2, Complex64::new(0.0, 1.0));
        let prod: Vec<Complex64> = a.to_physical().iter().zip(b.to_physical()).map(|(x, y)| x * y).collect();
        let aliased = forward(grid, &prod).unwrap();
        assert!(aliased.coeff(-7, 3).norm() > 0.1);
        let cleaned = aliased.dealias();

        // exact product on a doubled grid, then truncated to the coarse band
        let fine = GridSpec::new(32, 2.0 * PI, true).unwrap();
        let af = SpectralField2D::single_mode(fine, 5, 1, Complex64::new(1.0, 0.0));
        let bf = SpectralField2D::single_mode(fine, 4, 2, Complex64::new(0.0, 1.0));
        let pf: Vec<Complex64> = af.to_physical().iter().zip(bf.to_physical()).map(|(x, y)| x * y).collect();
        let exact = forward(fine, &pf).unwrap();
        for i in 0..grid.len() {
            let (m1, m2) = grid.modes(i);
            let want = if grid.in_dealias_band(i) { exact.coeff(m1, m2) } else { Complex64::new(0.0, 0.0) };
            assert!((cleaned.coeffs()[i] - want).norm() < 1e-12, "mode ({m1},{m2})");
        }
    }
}
