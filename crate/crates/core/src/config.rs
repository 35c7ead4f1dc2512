//! Run configuration (TOML) and the initial-condition families.

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsSchedule;
use crate::error::{Result, ZakharovError};
use crate::solver::{InitialData, SplitStepConfig};
use crate::spectral::{GridSpec, RealField2D, SpectralField2D, DEFAULT_PERIOD};
use crate::xsb::ProbeConfig;

/// Every key with its default, as shown by `--help`.
pub const CONFIG_REFERENCE: &str = "\
Config file (TOML). Every key is optional unless marked; unknown keys are errors.

[grid]        n = 64              # power of two >= 8
              period = 100.53...  # 32*pi
              dealias = true      # 2/3 rule
[solver]      dt                  # required for simulate / check-duhamel
              t_final             # required for simulate / check-duhamel
              checkpoint_every = 100
              lifetime_alpha = 2.0, lifetime_c = 1.0
[data]        family = \"gaussian_packet\"   # | \"single_mode\" | \"multi_mode_random\"
              amplitude = 0.1, width = 4.0, center = [L/2, L/2], carrier = [0, 0]
              mode = [1, 0]       # single_mode
              max_mode = 4        # multi_mode_random: |m1|,|m2| <= max_mode
              wave_amplitude = 0.0, wave_width = 4.0, wave_velocity = 0.0
              b_mean = 0.0        # must be 0: b has to lie in H^-1-hat
              seed = 1
[diagnostics] every = 10, hs_orders = [1.0, 2.0, 4.0]
              increment = true, increment_order = 2
              t_min_fraction = 0.1, record_forcing = false
[probe]       b_exponent = 0.55, s1 = 0, s2 = 1, s = 0, trials = 200, seed = 1
              resolutions = [32, 64], delta = 0.05, period = 8*pi
              t_total = 1.0, flank_fraction = 0.1, envelope_r = 2.0
              modulation = 1.0, m_steps = 64
              lemma_period = pi, lemma_t_window = 2*pi/90, lemma_m_steps = 128
              lemma_kmin = 10.0, lemma_envelope_r = 4.0, sign = \"nearest\"
[output]      dir = \"out\", checkpoints = true
";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub solver: SolverSection,
    pub data: DataSection,
    pub diagnostics: DiagnosticsSection,
    pub probe: ProbeConfig,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub period: f64,
    pub dealias: bool,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 64, period: DEFAULT_PERIOD, dealias: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub checkpoint_every: usize,
    pub lifetime_alpha: f64,
    pub lifetime_c: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { dt: None, t_final: None, checkpoint_every: 100, lifetime_alpha: 2.0, lifetime_c: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GaussianPacket,
    SingleMode,
    MultiModeRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub family: Family,
    pub amplitude: f64,
    pub width: f64,
    /// Packet center; defaults to the middle of the box.
    pub center: Option<[f64; 2]>,
    /// Carrier wavevector of the packet.
    pub carrier: [f64; 2],
    pub mode: [i64; 2],
    pub max_mode: i64,
    pub wave_amplitude: f64,
    pub wave_width: f64,
    pub wave_velocity: f64,
    pub b_mean: f64,
    pub seed: u64,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            family: Family::GaussianPacket,
            amplitude: 0.1,
            width: 4.0,
            center: None,
            carrier: [0.0, 0.0],
            mode: [1, 0],
            max_mode: 4,
            wave_amplitude: 0.0,
            wave_width: 4.0,
            wave_velocity: 0.0,
            b_mean: 0.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub every: usize,
    pub hs_orders: Vec<f64>,
    pub increment: bool,
    pub increment_order: u32,
    pub t_min_fraction: f64,
    pub record_forcing: bool,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            every: 10,
            hs_orders: vec![1.0, 2.0, 4.0],
            increment: true,
            increment_order: 2,
            t_min_fraction: 0.1,
            record_forcing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub checkpoints: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), checkpoints: true }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ZakharovError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ZakharovError::Config(e.to_string()))
    }

    /// Reads and validates a config file.
    pub fn parse_config(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if let Some(dt) = self.solver.dt {
            self.split_step(dt).validate()?;
        }
        if let Some(t) = self.solver.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ZakharovError::Config(format!("solver.t_final must be positive, got {t}")));
            }
        }
        let d = &self.data;
        if d.b_mean != 0.0 {
            return Err(ZakharovError::Config(format!(
                "data.b_mean = {} is not allowed: the wave velocity b must be mean-free to lie in H^-1-hat",
                d.b_mean
            )));
        }
        if !(d.width > 0.0 && d.wave_width > 0.0) {
            return Err(ZakharovError::Config("data.width and data.wave_width must be positive".into()));
        }
        if d.max_mode < 0 {
            return Err(ZakharovError::Config("data.max_mode must be >= 0".into()));
        }
        for v in [d.amplitude, d.wave_amplitude, d.wave_velocity, d.carrier[0], d.carrier[1]] {
            if !v.is_finite() {
                return Err(ZakharovError::Config("data parameters must be finite".into()));
            }
        }
        self.schedule()?.validate()?;
        if !(0.0..1.0).contains(&self.diagnostics.t_min_fraction) {
            return Err(ZakharovError::Config("diagnostics.t_min_fraction must lie in [0, 1)".into()));
        }
        self.probe.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.n, self.grid.period, self.grid.dealias)
    }

    pub fn split_step(&self, dt: f64) -> SplitStepConfig {
        SplitStepConfig {
            dt,
            dealias: self.grid.dealias,
            checkpoint_every: self.solver.checkpoint_every,
            lifetime_alpha: self.solver.lifetime_alpha,
            lifetime_c: self.solver.lifetime_c,
        }
    }

    /// `(dt, t_final)`, both required for time stepping.
    pub fn time_span(&self) -> Result<(f64, f64)> {
        let dt = self.solver.dt.ok_or_else(|| ZakharovError::Config("solver.dt is required".into()))?;
        let t = self.solver.t_final.ok_or_else(|| ZakharovError::Config("solver.t_final is required".into()))?;
        Ok((dt, t))
    }

    pub fn schedule(&self) -> Result<DiagnosticsSchedule> {
        let d = &self.diagnostics;
        Ok(DiagnosticsSchedule {
            every: d.every,
            hs_orders: d.hs_orders.clone(),
            increment_order: d.increment.then_some(d.increment_order),
            record_forcing: d.record_forcing,
        })
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        initial_data(self.grid()?, &self.data)
    }
}

/// Keeps the 2/3 band and enforces the reality symmetry for real fields.
fn band_limit(field: SpectralField2D, real: bool) -> SpectralField2D {
    let f = field.map(|i, c| if field.grid().in_dealias_band(i) { c } else { Complex64::new(0.0, 0.0) });
    if real {
        f.symmetrize()
    } else {
        f
    }
}

fn gaussian(grid: GridSpec, center: [f64; 2], width: f64) -> RealField2D {
    let l = grid.period();
    RealField2D::from_fn(grid, |x, y| {
        // nearest periodic image so the bump is centered on the torus
        let dx = (x - center[0] + 0.5 * l).rem_euclid(l) - 0.5 * l;
        let dy = (y - center[1] + 0.5 * l).rem_euclid(l) - 0.5 * l;
        (-(dx * dx + dy * dy) / (width * width)).exp()
    })
}

/// Builds `(φ, a, b)` for a family. Fields are band-limited to the 2/3 band;
/// `b = v·(∂ₓ + ∂ᵧ)g` for a Gaussian `g`, hence mean-free.
pub fn initial_data(grid: GridSpec, d: &DataSection) -> Result<InitialData> {
    let l = grid.period();
    let center = d.center.unwrap_or([0.5 * l, 0.5 * l]);
    let phi_hat = match d.family {
        Family::GaussianPacket => {
            let g = gaussian(grid, center, d.width);
            let samples: Vec<Complex64> = g
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let [x, y] = grid.point(i);
                    Complex64::from_polar(d.amplitude * v, d.carrier[0] * x + d.carrier[1] * y)
                })
                .collect();
            crate::spectral::forward(grid, &samples)?
        }
        Family::SingleMode => {
            let [m1, m2] = d.mode;
            let f = SpectralField2D::single_mode(grid, m1, m2, Complex64::new(d.amplitude * l, 0.0));
            if !grid.in_dealias_band(grid.index_of(m1, m2)) {
                return Err(ZakharovError::Config(format!("data.mode ({m1}, {m2}) lies outside the 2/3 band")));
            }
            f
        }
        Family::MultiModeRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
            let mut f = SpectralField2D::zeros(grid);
            for m1 in -d.max_mode..=d.max_mode {
                for m2 in -d.max_mode..=d.max_mode {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let idx = grid.index_of(m1, m2);
                    if grid.in_dealias_band(idx) {
                        f.coeffs_mut()[idx] = Complex64::new(re, im) * (d.amplitude * l);
                    }
                }
            }
            f
        }
    };
    let g = gaussian(grid, center, d.wave_width).to_spectral();
    let a_hat = g.scale(d.wave_amplitude);
    let b_hat = g.map(|i, c| {
        let [k1, k2] = grid.wavevector(i);
        c * Complex64::new(0.0, k1 + k2) * d.wave_velocity
    });
    let mut b_hat = band_limit(b_hat, true);
    b_hat.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    InitialData::new(band_limit(phi_hat, false), band_limit(a_hat, true), b_hat)
}
