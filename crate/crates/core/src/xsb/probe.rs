//! Numerical ratio probes for the space-time estimates.
//!
//! Each trial draws random inputs, evaluates both sides of an inequality and
//! records `lhs / rhs`. What matters is whether the largest observed ratio
//! stays put as the spatial resolution grows.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{
    modulated_free_spectrum, padded_product, padded_size, Lattice, SpaceTimeSpectrum, TimeWindow,
};
use crate::error::{Result, ZakharovError};
use crate::spectral::{GridSpec, SpectralField2D};
use crate::wave::{ConeWeightSpec, SignPolicy};

/// Trials whose right-hand side falls below this are discarded.
pub const RHS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub b_exponent: f64,
    pub s1: i32,
    pub s2: i32,
    pub s: i32,
    pub trials: usize,
    pub seed: u64,
    pub resolutions: Vec<usize>,
    pub delta: f64,
    /// Torus period for the Strichartz and bilinear probes.
    pub period: f64,
    pub t_total: f64,
    pub flank_fraction: f64,
    /// Amplitude envelope `(1+|k|²)^{−r/2}` of the random draws.
    pub envelope_r: f64,
    /// Per-mode frequency detuning drawn uniformly from `[−modulation, modulation]`.
    pub modulation: f64,
    pub m_steps: usize,
    pub lemma_period: f64,
    pub lemma_t_window: f64,
    pub lemma_m_steps: usize,
    pub lemma_kmin: f64,
    /// Envelope exponent for the lemma arrays; steeper than `envelope_r` so
    /// the draws sit near `lemma_kmin` at every resolution.
    pub lemma_envelope_r: f64,
    pub sign: Sign,
}

/// Serializable mirror of [`SignPolicy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Nearest,
    Plus,
    Minus,
}

impl From<Sign> for SignPolicy {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Nearest => SignPolicy::NearestCone,
            Sign::Plus => SignPolicy::Plus,
            Sign::Minus => SignPolicy::Minus,
        }
    }
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            b_exponent: 0.55,
            s1: 0,
            s2: 1,
            s: 0,
            trials: 200,
            seed: 1,
            resolutions: vec![32, 64],
            delta: 0.05,
            period: 8.0 * std::f64::consts::PI,
            t_total: 1.0,
            flank_fraction: 0.1,
            envelope_r: 2.0,
            modulation: 1.0,
            m_steps: 64,
            lemma_period: std::f64::consts::PI,
            lemma_t_window: 2.0 * std::f64::consts::PI / 90.0,
            lemma_m_steps: 128,
            lemma_kmin: 10.0,
            lemma_envelope_r: 4.0,
            sign: Sign::Nearest,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b_exponent > 0.5 && self.b_exponent.is_finite()) {
            return Err(ZakharovError::Config(format!("b must exceed 1/2, got {}", self.b_exponent)));
        }
        if self.trials == 0 || self.resolutions.is_empty() {
            return Err(ZakharovError::Config("probe needs at least one trial and one resolution".into()));
        }
        for &n in &self.resolutions {
            GridSpec::new(n, self.period, true)?;
        }
        for m in [self.m_steps, self.lemma_m_steps] {
            if m < 4 || !m.is_power_of_two() {
                return Err(ZakharovError::Config(format!("time samples must be a power of two >= 4, got {m}")));
            }
        }
        if !(self.delta >= 0.0 && self.envelope_r >= 0.0 && self.modulation >= 0.0 && self.lemma_kmin >= 0.0 && self.lemma_envelope_r >= 0.0) {
            return Err(ZakharovError::Config("delta, envelope_r, modulation, lemma_kmin must be >= 0".into()));
        }
        if !(self.lemma_period > 0.0 && self.lemma_t_window > 0.0) {
            return Err(ZakharovError::Config("lemma period and window must be positive".into()));
        }
        TimeWindow::new(self.t_total, self.flank_fraction)?;
        Ok(())
    }

    pub fn window(&self) -> Result<TimeWindow> {
        TimeWindow::new(self.t_total, self.flank_fraction)
    }

    fn cone(&self, alpha: f64) -> ConeWeightSpec {
        ConeWeightSpec { alpha, sign_policy: self.sign.into(), include_trace_term: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVariant {
    Strichartz,
    /// `(□⁻¹Δ)^{1/2}` of the product against `X_{s₁+1,b} × X_{s₂−1/2,b}`.
    Prop1 { swapped: bool },
    /// `(□⁻¹Δ)^1` of the product against `X_{s₁+1,b} × X_{s₂,b}`.
    Prop2 { swapped: bool },
    Lemma,
}

impl ProbeVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeVariant::Strichartz => "strichartz",
            ProbeVariant::Prop1 { swapped: false } => "prop1",
            ProbeVariant::Prop1 { swapped: true } => "prop1_swapped",
            ProbeVariant::Prop2 { swapped: false } => "prop2",
            ProbeVariant::Prop2 { swapped: true } => "prop2_swapped",
            ProbeVariant::Lemma => "lemma",
        }
    }

    fn bilinear(&self) -> Option<(f64, f64, bool)> {
        // (cone power, order shift applied to u₂ on the right, swapped)
        match *self {
            ProbeVariant::Prop1 { swapped } => Some((0.5, -0.5, swapped)),
            ProbeVariant::Prop2 { swapped } => Some((1.0, 0.0, swapped)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeTrial {
    pub trial: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionReport {
    pub n: usize,
    pub m: usize,
    pub trials: Vec<ProbeTrial>,
    pub discarded: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub variant: ProbeVariant,
    pub config: ProbeConfig,
    pub resolutions: Vec<ResolutionReport>,
}

impl ProbeReport {
    /// Max ratio at the finest resolution over the max at the coarsest.
    pub fn growth(&self) -> Option<f64> {
        let first = self.resolutions.first()?;
        let last = self.resolutions.last()?;
        Some(last.max_ratio / first.max_ratio)
    }

    pub fn resolution(&self, n: usize) -> Option<&ResolutionReport> {
        self.resolutions.iter().find(|r| r.n == n)
    }
}

/// `‖B^s u‖_{L⁴_{xt}}`, evaluated on the `3n/2` padded grid where the
/// quadrature of `|u|⁴` is exact for fields in the 2/3 band.
pub fn l4_norm(u: &SpaceTimeSpectrum, s: f64) -> f64 {
    let n_pad = padded_size(u.lattice.n);
    let v = u.apply_b(s).embed(n_pad);
    let cell = v.lattice.cell();
    (v.to_samples().iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * cell).powf(0.25)
}

/// One Strichartz trial: `‖B^s u‖_{L⁴}` against `‖u‖_{X_{s,b}}`.
pub fn strichartz_ratio(u: &SpaceTimeSpectrum, s: f64, b: f64) -> Result<ProbeTrial> {
    check_windowed(u)?;
    Ok(trial_from(0, l4_norm(u, s), u.xsb_norm(s, b)))
}

/// `‖(□⁻¹Δ)^α F‖` for `F = B^{s₁}u₁·conj(B^{s₂}u₂)` (or with the conjugate on
/// `u₁` when `swapped`). The trace on the selected cone sheet is read off
/// `|F̂(k, ·)|` by linear interpolation when `cone.include_trace_term` is set.
pub fn bilinear_lhs(
    u1: &SpaceTimeSpectrum,
    u2: &SpaceTimeSpectrum,
    s1: f64,
    s2: f64,
    swapped: bool,
    cone: &ConeWeightSpec,
) -> Result<f64> {
    check_windowed(u1)?;
    check_windowed(u2)?;
    let f = padded_product(&u1.apply_b(s1), swapped, &u2.apply_b(s2), !swapped)?;
    Ok(cone_weighted_norm(&f, cone))
}

/// Weighted coefficient norm `( Σ |w^α (|F̂| + trace)|² )^{1/2}`.
pub fn cone_weighted_norm(f: &SpaceTimeSpectrum, cone: &ConeWeightSpec) -> f64 {
    let lat = f.lattice;
    let spatial = lat.spatial_len();
    let m = lat.m;
    let dl = lat.dlambda();
    let mut acc = 0.0;
    let mut column = vec![0.0; m];
    for s in 0..spatial {
        let [k1, k2] = lat.wavevector(s);
        let k_abs = (k1 * k1 + k2 * k2).sqrt();
        if k_abs == 0.0 {
            continue;
        }
        for (j, c) in column.iter_mut().enumerate() {
            *c = f.coeffs[j * spatial + s].norm();
        }
        if column.iter().all(|v| *v == 0.0) {
            continue;
        }
        for j in 0..m {
            let lambda = lat.lambda(j);
            let (dist, sheet) = cone.cone_distance(k_abs, lambda);
            let w = (k_abs / (1.0 + dist)).powf(cone.alpha);
            let trace = if cone.include_trace_term { interpolate(&column, sheet, dl) } else { 0.0 };
            acc += (w * (column[j] + trace)).powi(2);
        }
    }
    acc.sqrt()
}

/// Linear interpolation of a λ-column (FFT order, spacing `dl`) at `lambda`.
/// Zero outside the represented range.
pub fn interpolate(column: &[f64], lambda: f64, dl: f64) -> f64 {
    let m = column.len() as i64;
    let x = lambda / dl;
    let lo = x.floor();
    let frac = x - lo;
    let lo = lo as i64;
    let at = |j: i64| -> f64 {
        if j < -m / 2 || j >= m / 2 {
            0.0
        } else {
            column[j.rem_euclid(m) as usize]
        }
    };
    (1.0 - frac) * at(lo) + frac * at(lo + 1)
}

/// One bilinear trial for a Prop1/Prop2 variant.
pub fn bilinear_probe(
    u1: &SpaceTimeSpectrum,
    u2: &SpaceTimeSpectrum,
    s1: i32,
    s2: i32,
    variant: ProbeVariant,
    config: &ProbeConfig,
) -> Result<ProbeTrial> {
    let (alpha, shift, swapped) = variant
        .bilinear()
        .ok_or_else(|| ZakharovError::Argument(format!("{} is not a bilinear variant", variant.name())))?;
    if s1 > s2 {
        return Err(ZakharovError::Hypothesis(format!("requires s1 <= s2, got s1={s1}, s2={s2}")));
    }
    let (s1, s2) = (s1 as f64, s2 as f64);
    let b = config.b_exponent;
    let lhs = bilinear_lhs(u1, u2, s1, s2, swapped, &config.cone(alpha))?;
    let rhs = u1.xsb_norm(s1 + 1.0, b) * u2.xsb_norm(s2 + shift, b);
    Ok(trial_from(0, lhs, rhs))
}

/// Nonnegative coefficient arrays entering the trilinear lemma pairing, all on
/// one lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaInputs {
    pub lattice: Lattice,
    pub f: Vec<f64>,
    pub d: Vec<f64>,
    pub c1: Vec<f64>,
}

impl LemmaInputs {
    fn check(&self) -> Result<()> {
        let len = self.lattice.len();
        for a in [&self.f, &self.d, &self.c1] {
            if a.len() != len {
                return Err(ZakharovError::Shape { expected: len, actual: a.len() });
            }
            if a.iter().any(|v| !(*v >= 0.0)) {
                return Err(ZakharovError::Argument("lemma arrays must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// `D̂ = (1+|k|)^{−δ} d / (1+dist(λ, cone))^b`.
pub fn wave_weighted(lattice: &Lattice, d: &[f64], delta: f64, b: f64, sign: SignPolicy) -> Vec<Complex64> {
    weighted(lattice, d, delta, b, sign, |k2| k2.sqrt())
}

/// `Ĉ = (1+|k|)^{−δ} c₁ / (1+dist(λ, paraboloid))^b`.
pub fn schrodinger_weighted(lattice: &Lattice, c1: &[f64], delta: f64, b: f64, sign: SignPolicy) -> Vec<Complex64> {
    weighted(lattice, c1, delta, b, sign, |k2| k2)
}

fn weighted(
    lattice: &Lattice,
    a: &[f64],
    delta: f64,
    b: f64,
    sign: SignPolicy,
    surface: impl Fn(f64) -> f64,
) -> Vec<Complex64> {
    let k2 = lattice.k_squared();
    let spatial = lattice.spatial_len();
    a.iter()
        .enumerate()
        .map(|(i, v)| {
            let q = k2[i % spatial];
            let lambda = lattice.lambda(i / spatial);
            let h = surface(q);
            let dist = match sign {
                SignPolicy::Plus => (lambda - h).abs(),
                SignPolicy::Minus => (lambda + h).abs(),
                SignPolicy::NearestCone => (lambda - h).abs().min((lambda + h).abs()),
            };
            Complex64::new(v * (1.0 + q.sqrt()).powf(-delta) / (1.0 + dist).powf(b), 0.0)
        })
        .collect()
}

/// `Σ f · (D ∗ C)^` with the convolution evaluated as a pointwise product in
/// physical space-time (spatially padded, so the spatial sum is not cyclic;
/// cyclic in λ).
pub fn lemma_pairing(inputs: &LemmaInputs, delta: f64, b: f64, sign: SignPolicy) -> Result<f64> {
    inputs.check()?;
    let lat = inputs.lattice;
    let dhat = SpaceTimeSpectrum { lattice: lat, coeffs: wave_weighted(&lat, &inputs.d, delta, b, sign), windowed: true };
    let chat =
        SpaceTimeSpectrum { lattice: lat, coeffs: schrodinger_weighted(&lat, &inputs.c1, delta, b, sign), windowed: true };
    let prod = padded_product(&dhat, false, &chat, false)?;
    let pl = prod.lattice;
    let spatial = lat.spatial_len();
    let mut acc = 0.0;
    for (i, f) in inputs.f.iter().enumerate() {
        if *f == 0.0 {
            continue;
        }
        let (m1, m2) = lat.modes(i % spatial);
        acc += f * prod.coeffs[(i / spatial) * pl.spatial_len() + pl.spatial_index(m1, m2)].re;
    }
    Ok(acc)
}

/// One lemma trial: the pairing against `‖f‖‖d‖‖c₁‖`.
pub fn lemma_ratio(inputs: &LemmaInputs, delta: f64, b: f64, sign: SignPolicy) -> Result<ProbeTrial> {
    let lhs = lemma_pairing(inputs, delta, b, sign)?;
    let norm = |a: &[f64]| a.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(trial_from(0, lhs, norm(&inputs.f) * norm(&inputs.d) * norm(&inputs.c1)))
}

fn trial_from(trial: usize, lhs: f64, rhs: f64) -> ProbeTrial {
    ProbeTrial { trial, lhs, rhs, ratio: if rhs >= RHS_FLOOR { lhs / rhs } else { f64::NAN } }
}

fn check_windowed(u: &SpaceTimeSpectrum) -> Result<()> {
    if u.windowed {
        Ok(())
    } else {
        Err(ZakharovError::Contract("probe input is not windowed".into()))
    }
}

/// Deterministic 64-bit mixing of the seed with the draw coordinates.
fn mix(words: &[u64]) -> u64 {
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for w in words {
        let mut z = h ^ w.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

/// Generator for one spatial mode of one input. Keyed by the signed mode, so
/// a finer grid sees the same draws on the modes it shares with a coarser one.
fn mode_rng(seed: u64, trial: usize, field: u64, m1: i64, m2: i64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(&[seed, trial as u64, field, m1 as u64, m2 as u64]))
}

fn in_band(m1: i64, m2: i64, n: usize) -> bool {
    let cut = (n / 3) as i64;
    m1.abs() <= cut && m2.abs() <= cut
}

/// Random modulated free wave: complex Gaussian `φ̂` under the power-law
/// envelope in the 2/3 band, each mode detuned by a uniform `μ_k`, windowed.
pub fn random_free_wave(
    grid: GridSpec,
    config: &ProbeConfig,
    trial: usize,
    field: u64,
) -> Result<SpaceTimeSpectrum> {
    let window = config.window()?;
    let k2 = grid.k_squared();
    let mut phi = SpectralField2D::zeros(grid);
    let mut detuning = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let (m1, m2) = grid.modes(i);
        if !in_band(m1, m2, grid.n()) {
            continue;
        }
        let mut rng = mode_rng(config.seed, trial, field, m1, m2);
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let env = (1.0 + k2[i]).powf(-0.5 * config.envelope_r);
        phi.coeffs_mut()[i] = Complex64::new(re, im) * (env / std::f64::consts::SQRT_2);
        detuning[i] = config.modulation * rng.gen_range(-1.0..=1.0);
    }
    modulated_free_spectrum(&phi, &detuning, &window, config.m_steps)
}

/// Random nonnegative lemma arrays on the `n`-resolution lemma lattice.
pub fn random_lemma_inputs(n: usize, config: &ProbeConfig, trial: usize) -> LemmaInputs {
    let lattice = Lattice { n, period: config.lemma_period, t_window: config.lemma_t_window, m: config.lemma_m_steps };
    let spatial = lattice.spatial_len();
    let m = lattice.m as i64;
    let k2 = lattice.k_squared();
    let mut arrays = [vec![0.0; lattice.len()], vec![0.0; lattice.len()], vec![0.0; lattice.len()]];
    for s in 0..spatial {
        let (m1, m2) = lattice.modes(s);
        if !in_band(m1, m2, n) || k2[s].sqrt() < config.lemma_kmin {
            continue;
        }
        let env = (1.0 + k2[s]).powf(-0.5 * config.lemma_envelope_r);
        for (id, a) in arrays.iter_mut().enumerate() {
            let mut rng = mode_rng(config.seed, trial, 100 + id as u64, m1, m2);
            // λ column drawn in signed order so it does not depend on storage
            for jj in -(m / 2)..(m / 2) {
                let g: f64 = rng.sample(StandardNormal);
                if 3 * jj.abs() < m {
                    a[jj.rem_euclid(m) as usize * spatial + s] = g.abs() * env;
                }
            }
        }
    }
    for a in arrays.iter_mut() {
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            a.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let [f, d, c1] = arrays;
    LemmaInputs { lattice, f, d, c1 }
}

fn run_trial(variant: ProbeVariant, n: usize, config: &ProbeConfig, trial: usize) -> Result<ProbeTrial> {
    let b = config.b_exponent;
    let mut t = match variant {
        ProbeVariant::Lemma => {
            let inputs = random_lemma_inputs(n, config, trial);
            lemma_ratio(&inputs, config.delta, b, config.sign.into())?
        }
        ProbeVariant::Strichartz => {
            let grid = GridSpec::new(n, config.period, true)?;
            let u = random_free_wave(grid, config, trial, 0)?;
            strichartz_ratio(&u, config.s as f64, b)?
        }
        _ => {
            let grid = GridSpec::new(n, config.period, true)?;
            let u1 = random_free_wave(grid, config, trial, 1)?;
            let u2 = random_free_wave(grid, config, trial, 2)?;
            bilinear_probe(&u1, &u2, config.s1, config.s2, variant, config)?
        }
    };
    t.trial = trial;
    Ok(t)
}

/// Runs `config.trials` trials at every resolution. Trials run in parallel and
/// are merged by index, so the report depends only on the config.
pub fn run_probe(variant: ProbeVariant, config: &ProbeConfig) -> Result<ProbeReport> {
    config.validate()?;
    if variant.bilinear().is_some() && config.s1 > config.s2 {
        return Err(ZakharovError::Hypothesis(format!(
            "requires s1 <= s2, got s1={}, s2={}",
            config.s1, config.s2
        )));
    }
    let mut resolutions = Vec::with_capacity(config.resolutions.len());
    for &n in &config.resolutions {
        let results: Vec<Result<ProbeTrial>> =
            (0..config.trials).into_par_iter().map(|trial| run_trial(variant, n, config, trial)).collect();
        let mut trials = Vec::with_capacity(config.trials);
        let mut discarded = 0;
        for r in results {
            let t = r?;
            if t.rhs < RHS_FLOOR {
                discarded += 1;
            } else {
                trials.push(t);
            }
        }
        let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
        let m = if variant == ProbeVariant::Lemma { config.lemma_m_steps } else { config.m_steps };
        resolutions.push(ResolutionReport { n, m, trials, discarded, max_ratio });
    }
    Ok(ProbeReport { variant, config: config.clone(), resolutions })
}

/// `trial,lhs,rhs,ratio` rows for one resolution.
pub fn write_probe_csv(report: &ResolutionReport) -> String {
    let mut out = String::from("trial,lhs,rhs,ratio\n");
    for t in &report.trials {
        writeln!(out, "{},{:.17e},{:.17e},{:.17e}", t.trial, t.lhs, t.rhs, t.ratio).unwrap();
    }
    out
}

/// `key=value` sidecar describing one resolution of a report.
pub fn write_probe_meta(report: &ProbeReport, res: &ResolutionReport) -> String {
    let c = &report.config;
    let mut out = String::new();
    for (k, v) in [
        ("seed", c.seed.to_string()),
        ("b", c.b_exponent.to_string()),
        ("s", c.s.to_string()),
        ("s1", c.s1.to_string()),
        ("s2", c.s2.to_string()),
        ("delta", c.delta.to_string()),
        ("N", res.n.to_string()),
        ("M", res.m.to_string()),
        ("variant", report.variant.name().to_string()),
        ("trials", c.trials.to_string()),
        ("discarded", res.discarded.to_string()),
        ("max_ratio", format!("{:.17e}", res.max_ratio)),
    ] {
        writeln!(out, "{k}={v}").unwrap();
    }
    out
}
