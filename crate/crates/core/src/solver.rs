//! Strang-split time stepping of the Zakharov system
//!
//! ```text
//! i u_t + Δu = n u,    n_tt − Δn = Δ|u|²
//! ```
//!
//! The linear sub-flow (free Schrödinger plus free wave) is diagonal in
//! Fourier space. The coupling sub-flow `u_t = −i n u`, `n_t = 0`,
//! `ṅ_t = Δ|u|²` keeps `|u|` and `n` frozen pointwise, so it is solved exactly
//! by a phase rotation and a linear kick of `ṅ`.

use num_complex::Complex64;
use thiserror::Error;

use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsSchedule};
use crate::error::{Result, ZakharovError};
use crate::spectral::{forward, GridSpec, SpectralField2D};
use crate::wave::{check_mean_free, forced_step_with, free_wave_propagate, WaveRotation, WaveState};

/// Initial data `(φ, a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi_hat: SpectralField2D,
    pub a_hat: SpectralField2D,
    pub b_hat: SpectralField2D,
}

impl InitialData {
    pub fn new(phi_hat: SpectralField2D, a_hat: SpectralField2D, b_hat: SpectralField2D) -> Result<Self> {
        let grid = phi_hat.grid();
        if a_hat.grid() != grid || b_hat.grid() != grid {
            return Err(ZakharovError::GridMismatch("initial data fields live on different grids".into()));
        }
        let data = InitialData { phi_hat, a_hat, b_hat };
        data.wave().validate()?;
        Ok(data)
    }

    pub fn grid(&self) -> &GridSpec {
        self.phi_hat.grid()
    }

    /// The wave data `(a, b)` as a wave state.
    pub fn wave(&self) -> WaveState {
        WaveState { n_hat: self.a_hat.clone(), ndot_hat: self.b_hat.clone() }
    }

    pub fn initial_state(&self) -> ZakharovState {
        ZakharovState { u_hat: self.phi_hat.clone(), wave: self.wave(), t: 0.0 }
    }
}

/// `(u, n, ṅ)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZakharovState {
    pub u_hat: SpectralField2D,
    pub wave: WaveState,
    pub t: f64,
}

impl ZakharovState {
    pub fn grid(&self) -> &GridSpec {
        self.u_hat.grid()
    }

    pub fn mass(&self) -> f64 {
        self.u_hat.l2_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u_hat.is_finite() && self.wave.is_finite()
    }

    /// Relative L² distance over all three fields.
    pub fn distance(&self, other: &ZakharovState) -> Result<f64> {
        let du = self.u_hat.sub(&other.u_hat)?.l2_norm_sqr();
        let dw = self.wave.sub(&other.wave)?;
        let num = du + dw.n_hat.l2_norm_sqr() + dw.ndot_hat.l2_norm_sqr();
        let den = other.u_hat.l2_norm_sqr() + other.wave.n_hat.l2_norm_sqr() + other.wave.ndot_hat.l2_norm_sqr();
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStepConfig {
    pub dt: f64,
    /// 2/3-rule on `|u|²` before it forces the wave.
    pub dealias: bool,
    pub checkpoint_every: usize,
    pub lifetime_alpha: f64,
    pub lifetime_c: f64,
}

impl SplitStepConfig {
    pub fn new(dt: f64) -> Self {
        SplitStepConfig { dt, dealias: true, checkpoint_every: 100, lifetime_alpha: 2.0, lifetime_c: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ZakharovError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.checkpoint_every == 0 {
            return Err(ZakharovError::Config("checkpoint_every must be at least 1".into()));
        }
        if !(self.lifetime_c > 0.0) || !(self.lifetime_alpha >= 0.0) {
            return Err(ZakharovError::Config("lifetime constants must satisfy c > 0, alpha >= 0".into()));
        }
        Ok(())
    }
}

/// Free Schrödinger multiplier `e^{−i|k|²dt}` paired with the free wave rotation.
#[derive(Debug, Clone)]
struct LinearPropagator {
    phase: Vec<Complex64>,
    rotation: WaveRotation,
}

impl LinearPropagator {
    fn new(grid: GridSpec, dt: f64) -> Self {
        let phase = grid.k_squared().into_iter().map(|q| Complex64::from_polar(1.0, -q * dt)).collect();
        LinearPropagator { phase, rotation: WaveRotation::new(grid, dt) }
    }

    fn apply(&self, state: &mut ZakharovState) {
        for (c, p) in state.u_hat.coeffs_mut().iter_mut().zip(&self.phase) {
            *c *= p;
        }
        let WaveState { n_hat, ndot_hat } = &mut state.wave;
        self.rotation.apply(n_hat.coeffs_mut(), ndot_hat.coeffs_mut());
        state.t += self.rotation.time();
    }
}

/// Linear sub-flow over `dt`.
pub fn linear_flow(state: &ZakharovState, dt: f64) -> ZakharovState {
    let mut out = state.clone();
    LinearPropagator::new(*state.grid(), dt).apply(&mut out);
    out
}

/// `Ĝ`, the transform of `|u|²`, optionally 2/3-truncated.
pub fn density_hat(u_hat: &SpectralField2D, dealias: bool) -> SpectralField2D {
    let u = u_hat.to_physical();
    density_hat_from_samples(*u_hat.grid(), &u, dealias)
}

fn density_hat_from_samples(grid: GridSpec, u: &[Complex64], dealias: bool) -> SpectralField2D {
    let density: Vec<Complex64> = u.iter().map(|v| Complex64::new(v.norm_sqr(), 0.0)).collect();
    let g = forward(grid, &density).expect("grid-shaped samples").symmetrize();
    if dealias {
        g.dealias()
    } else {
        g
    }
}

/// Coupling sub-flow over `dt`; returns the new state and the frozen `Ĝ`.
fn coupling_flow_inner(state: &mut ZakharovState, dt: f64, dealias: bool) -> SpectralField2D {
    let grid = *state.grid();
    let mut u = state.u_hat.to_physical();
    let g_hat = density_hat_from_samples(grid, &u, dealias);
    let n = state.wave.n_hat.to_physical();
    for (v, nj) in u.iter_mut().zip(&n) {
        *v *= Complex64::from_polar(1.0, -dt * nj.re);
    }
    state.u_hat = forward(grid, &u).expect("grid-shaped samples");
    let k2 = grid.k_squared();
    for ((v, g), q) in state.wave.ndot_hat.coeffs_mut().iter_mut().zip(g_hat.coeffs()).zip(&k2) {
        *v -= dt * q * g;
    }
    g_hat
}

/// Exact flow of `u_t = −i n u`, `n_t = 0`, `ṅ_t = Δ|u|²` over `dt`.
pub fn coupling_flow(state: &ZakharovState, dt: f64, dealias: bool) -> ZakharovState {
    let mut out = state.clone();
    coupling_flow_inner(&mut out, dt, dealias);
    out
}

/// Reusable Strang step `L(dt/2) ∘ N(dt) ∘ L(dt/2)`.
#[derive(Debug, Clone)]
pub struct StrangStepper {
    grid: GridSpec,
    dt: f64,
    dealias: bool,
    half: LinearPropagator,
    full_rotation: WaveRotation,
}

impl StrangStepper {
    pub fn new(grid: GridSpec, dt: f64, dealias: bool) -> Self {
        StrangStepper {
            grid,
            dt,
            dealias,
            half: LinearPropagator::new(grid, 0.5 * dt),
            full_rotation: WaveRotation::new(grid, dt),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `state` by one step and returns the midpoint density `Ĝ`.
    pub fn step(&self, state: &mut ZakharovState) -> SpectralField2D {
        debug_assert_eq!(state.grid(), &self.grid);
        let t0 = state.t;
        self.half.apply(state);
        let g = coupling_flow_inner(state, self.dt, self.dealias);
        self.half.apply(state);
        state.t = t0 + self.dt;
        g
    }

    /// One exact frozen-forcing step of a zero-data Duhamel accumulator.
    pub fn duhamel_step(&self, acc: &WaveState, g_hat: &SpectralField2D) -> Result<WaveState> {
        forced_step_with(&self.full_rotation, acc, g_hat)
    }
}

pub fn strang_step(state: &ZakharovState, config: &SplitStepConfig) -> ZakharovState {
    let mut out = state.clone();
    StrangStepper::new(*state.grid(), config.dt, config.dealias).step(&mut out);
    out
}

/// `c · ‖(φ,a,b)‖_{H₁}^{−α}`.
pub fn lifetime_estimate(h1_norm: f64, alpha: f64, c: f64) -> f64 {
    c * h1_norm.powf(-alpha)
}

/// Output of [`simulate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    /// States at every checkpoint, starting with the initial one.
    pub checkpoints: Vec<ZakharovState>,
    pub records: Vec<DiagnosticsRecord>,
    /// Wave state at `base_time` from which the free part `W` is propagated.
    pub base_wave: WaveState,
    pub base_time: f64,
    /// Zero-data Duhamel response of the recorded `|u|²`, one per checkpoint.
    pub duhamel: Vec<WaveState>,
    /// Midpoint `Ĝ` of every step, when requested by the schedule.
    pub forcing_history: Option<Vec<SpectralField2D>>,
}

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("non-finite field at t = {t}; last good checkpoint at t = {}", .last_good.t)]
    Unstable { t: f64, last_good: Box<ZakharovState> },
    #[error(transparent)]
    Invalid(#[from] ZakharovError),
}

/// Runs from the initial data to `t_final`.
pub fn simulate(
    data: &InitialData,
    t_final: f64,
    config: &SplitStepConfig,
    schedule: &DiagnosticsSchedule,
) -> std::result::Result<Trajectory, SimulationError> {
    simulate_from(data.initial_state(), t_final, config, schedule)
}

/// Runs from an arbitrary state (e.g. a loaded checkpoint) to `t_final`.
pub fn simulate_from(
    start: ZakharovState,
    t_final: f64,
    config: &SplitStepConfig,
    schedule: &DiagnosticsSchedule,
) -> std::result::Result<Trajectory, SimulationError> {
    let free_base = start.wave.clone();
    let free_time = start.t;
    run(start, &free_base, free_time, t_final, config, schedule)
}

/// Continues a run from a saved state. The increment split keeps measuring
/// the free part against the original wave data `data_wave` (taken at t = 0),
/// so the records match those of an uninterrupted run.
pub fn simulate_resume(
    start: ZakharovState,
    data_wave: &WaveState,
    t_final: f64,
    config: &SplitStepConfig,
    schedule: &DiagnosticsSchedule,
) -> std::result::Result<Trajectory, SimulationError> {
    run(start, data_wave, 0.0, t_final, config, schedule)
}

fn run(
    start: ZakharovState,
    free_base: &WaveState,
    free_time: f64,
    t_final: f64,
    config: &SplitStepConfig,
    schedule: &DiagnosticsSchedule,
) -> std::result::Result<Trajectory, SimulationError> {
    config.validate()?;
    schedule.validate()?;
    start.wave.validate()?;
    let span = t_final - start.t;
    if !(span > 0.0) {
        return Err(ZakharovError::Argument(format!("t_final {t_final} must exceed start time {}", start.t)).into());
    }
    let grid = *start.grid();
    let steps = (span / config.dt).round() as usize;
    let stepper = StrangStepper::new(grid, config.dt, config.dealias);

    // finiteness checks no further apart than the estimated local lifetime
    let h1 = diagnostics::h1_triple(&start)?;
    let lifetime = lifetime_estimate(h1.max(f64::MIN_POSITIVE), config.lifetime_alpha, config.lifetime_c);
    let batch = ((lifetime / config.dt).floor() as usize).clamp(1, config.checkpoint_every);

    let base_wave = start.wave.clone();
    let base_time = start.t;
    let t0 = start.t;
    // a start on the dt lattice keeps times bit-identical to an uninterrupted run
    let k0 = (t0 / config.dt).round();
    let on_lattice = (k0 * config.dt - t0).abs() <= 1e-9 * config.dt;
    let clock = |i: usize| if on_lattice { (k0 + i as f64) * config.dt } else { t0 + i as f64 * config.dt };
    let mut state = start;
    let mut acc = WaveState::zeros(grid);
    let mut history = schedule.record_forcing.then(Vec::new);

    let mut records = vec![diagnostics::record(&state, free_base, free_time, schedule)?];
    let mut checkpoints = vec![state.clone()];
    let mut duhamel = vec![acc.clone()];
    let mut last_good = state.clone();

    for i in 1..=steps {
        let g = stepper.step(&mut state);
        state.t = clock(i);
        acc = stepper.duhamel_step(&acc, &g)?;
        if let Some(h) = history.as_mut() {
            h.push(g);
        }
        let at_checkpoint = i % config.checkpoint_every == 0 || i == steps;
        let at_record = i % schedule.every == 0 || i == steps;
        if (i % batch == 0 || at_checkpoint || at_record) && !state.is_finite() {
            return Err(SimulationError::Unstable { t: state.t, last_good: Box::new(last_good) });
        }
        if at_record {
            records.push(diagnostics::record(&state, free_base, free_time, schedule)?);
        }
        if at_checkpoint {
            checkpoints.push(state.clone());
            duhamel.push(acc.clone());
            last_good = state.clone();
        }
    }

    Ok(Trajectory {
        dt: config.dt,
        checkpoints,
        records,
        base_wave,
        base_time,
        duhamel,
        forcing_history: history,
    })
}

/// Per checkpoint: `‖n − W(a,b) − □⁻¹Δ|u|²‖_{L²} / (‖n‖_{L²} + 1)`.
pub fn duhamel_check(trajectory: &Trajectory) -> Result<Vec<(f64, f64)>> {
    trajectory
        .checkpoints
        .iter()
        .zip(&trajectory.duhamel)
        .map(|(state, forced)| {
            let free = free_wave_propagate(&trajectory.base_wave, state.t - trajectory.base_time);
            let residual = state.wave.n_hat.sub(&free.n_hat)?.sub(&forced.n_hat)?;
            check_mean_free(&state.wave.ndot_hat)?;
            Ok((state.t, residual.l2_norm() / (state.wave.n_hat.l2_norm() + 1.0)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::RealField2D;
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(16, 4.0 * PI, true).unwrap()
    }

    fn packet(grid: GridSpec, amp: f64) -> InitialData {
        let c = grid.period() / 2.0;
        let phi: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let [x, y] = grid.point(i);
                let r2 = (x - c).powi(2) + (y - c).powi(2);
                Complex64::from_polar(amp * (-r2 / 4.0).exp(), 0.5 * x)
            })
            .collect();
        let a = RealField2D::from_fn(grid, |x, y| 0.3 * (-((x - c).powi(2) + (y - c).powi(2)) / 6.0).exp());
        let b = RealField2D::from_fn(grid, |x, _| 0.2 * (grid.dk() * x).sin());
        InitialData::new(
            forward(grid, &phi).unwrap().dealias(),
            a.to_spectral().dealias().symmetrize(),
            b.to_spectral().dealias().symmetrize(),
        )
        .unwrap()
    }

    #[test]
    fn linear_flow_single_mode_phase() {
        let g = grid();
        let phi = SpectralField2D::single_mode(g, 2, 1, Complex64::new(1.0, 0.5));
        let state = InitialData::new(phi.clone(), SpectralField2D::zeros(g), SpectralField2D::zeros(g))
            .unwrap()
            .initial_state();
        let dt = 0.3;
        let out = linear_flow(&state, dt);
        let k2 = 5.0 * g.dk() * g.dk();
        let want = phi.coeff(2, 1) * Complex64::from_polar(1.0, -k2 * dt);
        assert!((out.u_hat.coeff(2, 1) - want).norm() < 1e-14);
        assert!((out.t - dt).abs() < 1e-15);
    }

    #[test]
    fn linear_flow_is_a_group_and_unitary() {
        let state = packet(grid(), 1.0).initial_state();
        let twice = linear_flow(&linear_flow(&state, 0.2), 0.2);
        let once = linear_flow(&state, 0.4);
        assert!(twice.distance(&once).unwrap() < 1e-12);
        assert!((once.mass() - state.mass()).abs() < 1e-13 * state.mass());
    }

    #[test]
    fn coupling_flow_uniform_phase() {
        let g = grid();
        let l = g.period();
        let phi = SpectralField2D::single_mode(g, 0, 0, Complex64::new(2.0 * l, 0.0));
        let n0 = 0.7;
        let a = SpectralField2D::single_mode(g, 0, 0, Complex64::new(n0 * l, 0.0));
        let state = InitialData::new(phi.clone(), a, SpectralField2D::zeros(g)).unwrap().initial_state();
        let dt = 0.25;
        let out = coupling_flow(&state, dt, true);
        assert!((out.u_hat.coeff(0, 0) - phi.coeff(0, 0) * Complex64::from_polar(1.0, -n0 * dt)).norm() < 1e-12);
        let dw = out.wave.sub(&state.wave).unwrap();
        assert!(dw.n_hat.l2_norm() + dw.ndot_hat.l2_norm() < 1e-12);
    }

    #[test]
    fn coupling_flow_keeps_modulus_pointwise() {
        let state = linear_flow(&packet(grid(), 1.5).initial_state(), 0.7);
        let out = coupling_flow(&state, 0.3, true);
        let before = state.u_hat.to_physical();
        let after = out.u_hat.to_physical();
        let scale = before.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (a, b) in before.iter().zip(&after) {
            assert!((a.norm() - b.norm()).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn coupling_kick_matches_expanded_density() {
        // u = 1 + ε cos(k₀·x) ⇒ |u|² = 1 + ε²/2 + 2ε cos(k₀x) + (ε²/2) cos(2k₀x)
        // Δ|u|² = −2ε|k₀|² cos(k₀x) − 2ε²|k₀|² cos(2k₀x)
        let g = grid();
        let eps = 0.1;
        let k0 = g.dk() * 2.0; // mode (2, 0)
        let u = RealField2D::from_fn(g, |x, _| 1.0 + eps * (k0 * x).cos()).to_spectral();
        let state = InitialData::new(u, SpectralField2D::zeros(g), SpectralField2D::zeros(g)).unwrap().initial_state();
        let dt = 0.05;
        let out = coupling_flow(&state, dt, true);
        let want = RealField2D::from_fn(g, |x, _| {
            dt * (-2.0 * eps * k0 * k0 * (k0 * x).cos() - 2.0 * eps * eps * k0 * k0 * (2.0 * k0 * x).cos())
        })
        .to_spectral();
        assert!(out.wave.ndot_hat.sub(&want).unwrap().l2_norm() < 1e-12);
    }

    #[test]
    fn decoupled_single_mode_stays_free() {
        let g = grid();
        let phi = SpectralField2D::single_mode(g, 1, -3, Complex64::new(3.0, 0.0));
        let data = InitialData::new(phi, SpectralField2D::zeros(g), SpectralField2D::zeros(g)).unwrap();
        let mut state = data.initial_state();
        let stepper = StrangStepper::new(g, 0.05, true);
        let norms0: Vec<f64> = [1.0, 2.0, 4.0].iter().map(|&s| state.u_hat.sobolev_norm(s)).collect();
        for _ in 0..200 {
            stepper.step(&mut state);
        }
        for (s, n0) in [1.0, 2.0, 4.0].iter().zip(&norms0) {
            assert!((state.u_hat.sobolev_norm(*s) - n0).abs() <= 1e-12 * n0);
        }
        assert!((state.u_hat.coeff(1, -3).norm() - 3.0).abs() < 1e-12);
        assert!(state.wave.n_hat.l2_norm() < 1e-12);
    }

    #[test]
    fn strang_step_is_reversible() {
        let data = packet(grid(), 1.0);
        let state = data.initial_state();
        let forward_cfg = SplitStepConfig::new(0.02);
        let back_cfg = SplitStepConfig::new(-0.02);
        let mut s = state.clone();
        for _ in 0..10 {
            s = strang_step(&s, &forward_cfg);
        }
        for _ in 0..10 {
            s = strang_step(&s, &back_cfg);
        }
        assert!(s.distance(&state).unwrap() < 1e-10);
    }

    #[test]
    fn lifetime_estimate_homogeneity() {
        assert_eq!(lifetime_estimate(1.0, 2.0, 0.3), 0.3);
        assert_eq!(lifetime_estimate(17.0, 0.0, 0.3), 0.3);
        let ratio = lifetime_estimate(3.0, 1.5, 2.0) / lifetime_estimate(6.0, 1.5, 2.0);
        assert!((ratio - 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_phi_gives_free_wave() {
        let data = packet(grid(), 0.0);
        let cfg = SplitStepConfig { checkpoint_every: 10, ..SplitStepConfig::new(0.05) };
        let traj = simulate(&data, 2.0, &cfg, &DiagnosticsSchedule::default()).unwrap();
        for state in &traj.checkpoints {
            assert_eq!(state.mass(), 0.0);
            let free = free_wave_propagate(&data.wave(), state.t);
            let diff = state.wave.sub(&free).unwrap();
            assert!(diff.n_hat.l2_norm() < 1e-12 * (1.0 + free.n_hat.l2_norm()));
        }
        for (_, r) in duhamel_check(&traj).unwrap() {
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn unstable_run_reports_last_good_state() {
        let g = grid();
        let mut phi = SpectralField2D::single_mode(g, 1, 0, Complex64::new(1.0, 0.0));
        phi.coeffs_mut()[5] = Complex64::new(f64::NAN, 0.0);
        let data = InitialData { phi_hat: phi, a_hat: SpectralField2D::zeros(g), b_hat: SpectralField2D::zeros(g) };
        let cfg = SplitStepConfig { checkpoint_every: 5, ..SplitStepConfig::new(0.01) };
        match simulate(&data, 0.2, &cfg, &DiagnosticsSchedule::default()) {
            Err(SimulationError::Unstable { last_good, .. }) => assert_eq!(last_good.t, 0.0),
            other => panic!("expected instability, got {other:?}"),
        }
    }
}
