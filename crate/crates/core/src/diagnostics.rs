//! Conserved quantities, Sobolev-norm tracking, the increment split of
//! `d/dt ‖B^s u‖²`, growth-exponent fits and the bound-iteration recurrence.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use num_complex::Complex64;

use crate::error::{Result, ZakharovError};
use crate::solver::{InitialData, ZakharovState};
use crate::spectral::{forward, SpectralField2D};
use crate::wave::{free_wave_propagate, hhat_minus1_norm, WaveState};

/// Which quantities to record, and how often.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSchedule {
    /// Steps between records.
    pub every: usize,
    pub hs_orders: Vec<f64>,
    /// Even order `s` of the increment split, if enabled.
    pub increment_order: Option<u32>,
    /// Keep every midpoint `Ĝ` in the trajectory.
    pub record_forcing: bool,
}

impl Default for DiagnosticsSchedule {
    fn default() -> Self {
        DiagnosticsSchedule { every: 10, hs_orders: vec![1.0, 2.0, 4.0], increment_order: Some(2), record_forcing: false }
    }
}

impl DiagnosticsSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.every == 0 {
            return Err(ZakharovError::Config("diagnostics.every must be at least 1".into()));
        }
        if let Some(s) = self.increment_order {
            check_even_order(s as f64)?;
        }
        if self.hs_orders.iter().any(|s| !s.is_finite()) {
            return Err(ZakharovError::Config("Sobolev orders must be finite".into()));
        }
        Ok(())
    }
}

/// `I_total` and its split into the linear, free-wave and cubic parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncrementTerms {
    pub total: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// Cauchy–Schwarz bound on every term; the natural scale for "zero".
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub h1_u: f64,
    pub l2_n: f64,
    pub hneg1_ndot: f64,
    /// `(‖u‖²_{H¹} + ‖n‖²_{L²} + ‖ṅ‖²_{Ĥ⁻¹})^{1/2}`.
    pub h1_triple: f64,
    pub hs_norms: Vec<(f64, f64)>,
    pub increment: Option<IncrementTerms>,
}

impl DiagnosticsRecord {
    pub fn hs(&self, s: f64) -> Option<f64> {
        self.hs_norms.iter().find(|(order, _)| *order == s).map(|(_, v)| *v)
    }
}

/// `H = ∫ |∇u|² + ½(n² + |V|²) + n|u|²` with `∇·V = ṅ`, `V` curl-free.
pub fn hamiltonian(state: &ZakharovState) -> Result<f64> {
    let k2 = state.grid().k_squared();
    let kinetic: f64 = state.u_hat.coeffs().iter().zip(&k2).map(|(c, q)| q * c.norm_sqr()).sum();
    let v2 = hhat_minus1_norm(&state.wave.ndot_hat)?.powi(2);
    let n2 = state.wave.n_hat.l2_norm_sqr();
    let u = state.u_hat.to_physical();
    let n = state.wave.n_hat.to_physical();
    let h = state.grid().spacing();
    let coupling: f64 = u.iter().zip(&n).map(|(v, nj)| nj.re * v.norm_sqr()).sum::<f64>() * h * h;
    Ok(kinetic + 0.5 * (n2 + v2) + coupling)
}

pub fn h1_triple(state: &ZakharovState) -> Result<f64> {
    let u = state.u_hat.sobolev_norm(1.0);
    let n = state.wave.n_hat.l2_norm();
    let v = hhat_minus1_norm(&state.wave.ndot_hat)?;
    Ok((u * u + n * n + v * v).sqrt())
}

fn check_even_order(s: f64) -> Result<u32> {
    if s >= 2.0 && s.fract() == 0.0 && (s as u64) % 2 == 0 && s < 64.0 {
        Ok(s as u32)
    } else {
        Err(ZakharovError::UnsupportedOrder(s))
    }
}

/// `‖B^s u‖²_{L²}`.
pub fn b_energy(u_hat: &SpectralField2D, s: f64) -> f64 {
    let k2 = u_hat.grid().k_squared();
    u_hat.coeffs().iter().zip(&k2).map(|(c, q)| q.powf(s) * c.norm_sqr()).sum()
}

/// Transform of the pointwise product of a real potential with a field.
fn product_hat(potential: &[Complex64], u: &[Complex64], like: &SpectralField2D) -> SpectralField2D {
    let prod: Vec<Complex64> = potential.iter().zip(u).map(|(p, v)| p.re * v).collect();
    forward(*like.grid(), &prod).expect("grid-shaped samples")
}

/// Split of `I = 2 Re⟨B^s u_t, B^s u⟩` for `u_t = iΔu − i n u`, with
/// `n = n_free + n_cubic` and `n_free` the free wave at the state's time.
pub fn increment_decomposition(state: &ZakharovState, n_free: &SpectralField2D, s: f64) -> Result<IncrementTerms> {
    let s = check_even_order(s)? as i32;
    let grid = *state.grid();
    let k2 = grid.k_squared();
    let bs: Vec<f64> = k2.iter().map(|q| q.powi(s / 2)).collect();
    let u_hat = &state.u_hat;
    let u = u_hat.to_physical();
    let n_cubic = state.wave.n_hat.sub(n_free)?;

    let n_full_u = product_hat(&state.wave.n_hat.to_physical(), &u, u_hat);
    let n_free_u = product_hat(&n_free.to_physical(), &u, u_hat);
    let n_cubic_u = product_hat(&n_cubic.to_physical(), &u, u_hat);

    // ⟨B^s f, B^s u⟩ = Σ |k|^{2s} f̂ conj(û)
    let pair = |f: &dyn Fn(usize) -> Complex64| -> Complex64 {
        (0..grid.len()).map(|i| bs[i] * bs[i] * f(i) * u_hat.coeffs()[i].conj()).sum()
    };
    let uc = u_hat.coeffs();
    let i_unit = Complex64::i();
    let lap = pair(&|i| -k2[i] * uc[i]);
    let i1 = -2.0 * lap.im;
    let i2 = 2.0 * pair(&|i| n_free_u.coeffs()[i]).im;
    let i3 = 2.0 * pair(&|i| n_cubic_u.coeffs()[i]).im;
    let total = 2.0 * pair(&|i| i_unit * (-k2[i] * uc[i]) - i_unit * n_full_u.coeffs()[i]).re;

    let norm_bs = |f: &dyn Fn(usize) -> Complex64| -> f64 {
        (0..grid.len()).map(|i| (bs[i] * f(i)).norm_sqr()).sum::<f64>().sqrt()
    };
    let scale = 2.0
        * norm_bs(&|i| uc[i])
        * (norm_bs(&|i| k2[i] * uc[i]) + norm_bs(&|i| n_full_u.coeffs()[i]) + norm_bs(&|i| n_free_u.coeffs()[i]));
    Ok(IncrementTerms { total, i1, i2, i3, scale })
}

/// [`increment_decomposition`] with `n_free = W(a,b)(t)` from the initial data.
pub fn increment_from_data(state: &ZakharovState, data: &InitialData, s: f64) -> Result<IncrementTerms> {
    let free = free_wave_propagate(&data.wave(), state.t);
    increment_decomposition(state, &free.n_hat, s)
}

/// `2 Im⟨n·B^s u, B^s u⟩` for a real potential `n`, and its natural scale
/// `2‖n‖_∞‖B^s u‖²`.
pub fn real_potential_term(u_hat: &SpectralField2D, n_hat: &SpectralField2D, s: f64) -> Result<(f64, f64)> {
    let bsu = u_hat.apply_b(s)?;
    let n = n_hat.to_physical();
    let prod = product_hat(&n, &bsu.to_physical(), u_hat);
    let value = 2.0 * prod.inner(&bsu)?.im;
    let n_max = n.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
    Ok((value, 2.0 * n_max * bsu.l2_norm_sqr()))
}

/// Diagnostics of one state; `base_wave` at `base_time` defines the free wave part.
pub fn record(
    state: &ZakharovState,
    base_wave: &WaveState,
    base_time: f64,
    schedule: &DiagnosticsSchedule,
) -> Result<DiagnosticsRecord> {
    let h1_u = state.u_hat.sobolev_norm(1.0);
    let l2_n = state.wave.n_hat.l2_norm();
    let hneg1_ndot = hhat_minus1_norm(&state.wave.ndot_hat)?;
    let increment = match schedule.increment_order {
        Some(s) => {
            let free = free_wave_propagate(base_wave, state.t - base_time);
            Some(increment_decomposition(state, &free.n_hat, s as f64)?)
        }
        None => None,
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: state.mass(),
        hamiltonian: hamiltonian(state)?,
        h1_u,
        l2_n,
        hneg1_ndot,
        h1_triple: (h1_u * h1_u + l2_n * l2_n + hneg1_ndot * hneg1_ndot).sqrt(),
        hs_norms: schedule.hs_orders.iter().map(|&s| (s, state.u_hat.sobolev_norm(s))).collect(),
        increment,
    })
}

/// Column name for the `H^s` norm.
pub fn hs_column(s: f64) -> String {
    format!("hs_{s}")
}

/// Writes records as CSV. The first line is a `#` comment carrying `stamp`;
/// everything after it depends only on the records.
pub fn write_csv(records: &[DiagnosticsRecord], stamp: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# zakharov diagnostics; {stamp}");
    let orders: Vec<f64> = records.first().map(|r| r.hs_norms.iter().map(|(s, _)| *s).collect()).unwrap_or_default();
    let mut header = vec!["t", "mass", "hamiltonian", "h1_u", "l2_n", "hneg1_ndot"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend(orders.iter().map(|&s| hs_column(s)));
    header.extend(["I_total", "I1", "I2", "I3"].map(String::from));
    let _ = writeln!(out, "{}", header.join(","));
    for r in records {
        let mut row = vec![r.t, r.mass, r.hamiltonian, r.h1_u, r.l2_n, r.hneg1_ndot]
            .into_iter()
            .map(fmt_f64)
            .collect::<Vec<_>>();
        row.extend(r.hs_norms.iter().map(|(_, v)| fmt_f64(*v)));
        match r.increment {
            Some(inc) => row.extend([inc.total, inc.i1, inc.i2, inc.i3].map(fmt_f64)),
            None => row.extend(std::iter::repeat(String::new()).take(4)),
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.17e}")
}

/// Reads the `(t, column)` series from a diagnostics-style CSV.
pub fn read_series(reader: impl Read, column: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = BufReader::new(reader).lines().filter(|l| match l {
        Ok(s) => !s.trim().is_empty() && !s.starts_with('#'),
        Err(_) => true,
    });
    let header = lines.next().ok_or_else(|| ZakharovError::Format("empty CSV".into()))??;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| ZakharovError::Format(format!("CSV has no column '{name}'")))
    };
    let t_col = find("t")?;
    let v_col = find(column)?;
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |idx: usize| -> Result<f64> {
            fields
                .get(idx)
                .ok_or_else(|| ZakharovError::Format(format!("row {} is short", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| ZakharovError::Format(format!("row {}: {e}", lineno + 1)))
        };
        out.push((parse(t_col)?, parse(v_col)?));
    }
    Ok(out)
}

/// Power-law fit `x(t) ≈ C·t^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub s: f64,
    pub t_min: f64,
    pub exponent_alpha: f64,
    pub prefactor_c: f64,
    /// RMS residual in log-log coordinates.
    pub residual: f64,
}

/// Least-squares line `y = slope·x + intercept`, with the RMS residual.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Fits `log x = α log t + log C` over points with `t ≥ t_min` (and `t, x > 0`).
pub fn fit_power_law(series: &[(f64, f64)], s: f64, t_min: f64) -> Result<GrowthFit> {
    let logs: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, x)| *t >= t_min && *t > 0.0 && *x > 0.0)
        .map(|(t, x)| (t.ln(), x.ln()))
        .collect();
    if logs.len() < 4 {
        return Err(ZakharovError::InsufficientData { needed: 4, found: logs.len() });
    }
    let (alpha, log_c, residual) = linear_fit(&logs);
    Ok(GrowthFit { s, t_min, exponent_alpha: alpha, prefactor_c: log_c.exp(), residual })
}

/// Growth fit of `‖u(t)‖_{H^s}` from records.
pub fn fit_growth(records: &[DiagnosticsRecord], s: f64, t_min: f64) -> Result<GrowthFit> {
    let series: Vec<(f64, f64)> = records.iter().filter_map(|r| r.hs(s).map(|v| (r.t, v))).collect();
    fit_power_law(&series, s, t_min)
}

/// Iterates of the local-to-global bounds.
#[derive(Debug, Clone)]
pub struct BoundIteration {
    /// `x_{n+1} = x_n + c·x_n^{1−δ}`.
    pub additive: Vec<f64>,
    /// Power-law exponent of `x_n` against `n`, fitted over the last 90% of steps.
    pub additive_exponent: f64,
    /// `x_{n+1} = (1+c)·x_n`, stopped before overflow.
    pub multiplicative: Vec<f64>,
    pub multiplicative_rate: f64,
    pub multiplicative_residual: f64,
}

pub fn iterate_local_bound(c: f64, delta: f64, x0: f64, steps: usize) -> Result<BoundIteration> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(ZakharovError::Argument(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(c > 0.0 && x0 > 0.0) || steps < 10 {
        return Err(ZakharovError::Argument("need c > 0, x0 > 0 and at least 10 steps".into()));
    }
    let mut additive = Vec::with_capacity(steps + 1);
    let mut x = x0;
    additive.push(x);
    for _ in 0..steps {
        x += c * x.powf(1.0 - delta);
        additive.push(x);
    }
    let start = (steps / 10).max(1);
    let points: Vec<(f64, f64)> = (start..=steps).map(|n| ((n as f64).ln(), additive[n].ln())).collect();
    let (additive_exponent, _, _) = linear_fit(&points);

    let mut multiplicative = vec![x0];
    let mut y = x0;
    for _ in 0..steps {
        let next = (1.0 + c) * y;
        if !next.is_finite() || next > f64::MAX / (1.0 + c) {
            break;
        }
        y = next;
        multiplicative.push(y);
    }
    let log_points: Vec<(f64, f64)> = multiplicative.iter().enumerate().map(|(n, v)| (n as f64, v.ln())).collect();
    let (rate, _, residual) = linear_fit(&log_points);
    Ok(BoundIteration {
        additive,
        additive_exponent,
        multiplicative,
        multiplicative_rate: rate,
        multiplicative_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GridSpec, RealField2D};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(16, 4.0 * PI, true).unwrap()
    }

    fn random_state(seed: u64) -> ZakharovState {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let u: Vec<Complex64> =
            (0..g.len()).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
        let n = RealField2D::from_fn(g, |_, _| normal.sample(&mut rng)).to_spectral();
        let v = RealField2D::from_fn(g, |_, _| normal.sample(&mut rng))
            .to_spectral()
            .map(|i, c| if i == 0 { Complex64::new(0.0, 0.0) } else { c });
        ZakharovState { u_hat: forward(g, &u).unwrap(), wave: WaveState { n_hat: n, ndot_hat: v }, t: 0.3 }
    }

    #[test]
    fn hamiltonian_special_cases() {
        let mut s = random_state(1);
        let g = *s.grid();
        s.wave = WaveState::zeros(g);
        let grad2 = b_energy(&s.u_hat, 1.0);
        assert!((hamiltonian(&s).unwrap() - grad2).abs() < 1e-12 * grad2);

        let n = SpectralField2D::single_mode(g, 1, 2, Complex64::new(0.0, 0.0))
            .add(&RealField2D::from_fn(g, |x, y| 0.8 * (g.dk() * (x + 2.0 * y)).cos()).to_spectral())
            .unwrap();
        let wave_only = ZakharovState { u_hat: SpectralField2D::zeros(g), wave: WaveState { n_hat: n.clone(), ndot_hat: SpectralField2D::zeros(g) }, t: 0.0 };
        let h = hamiltonian(&wave_only).unwrap();
        assert!((h - 0.5 * n.l2_norm_sqr()).abs() < 1e-12 * h);

        let mut bad = random_state(2);
        bad.wave.ndot_hat.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
        assert!(matches!(hamiltonian(&bad), Err(ZakharovError::NotMeanFree { .. })));
    }

    #[test]
    fn increment_split_is_exact() {
        for seed in 0..5 {
            let s = random_state(seed);
            let free = random_state(seed + 100).wave.n_hat;
            for order in [2.0, 4.0] {
                let inc = increment_decomposition(&s, &free, order).unwrap();
                assert!(inc.i1.abs() <= 1e-12 * inc.scale);
                assert!((inc.total - inc.i1 - inc.i2 - inc.i3).abs() <= 1e-12 * inc.scale);
                let (v, scale) = real_potential_term(&s.u_hat, &s.wave.n_hat, order).unwrap();
                assert!(v.abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn increment_rejects_odd_orders() {
        let s = random_state(0);
        let free = s.wave.n_hat.clone();
        for order in [1.0, 3.0, 2.5, 0.0] {
            assert!(matches!(increment_decomposition(&s, &free, order), Err(ZakharovError::UnsupportedOrder(_))));
        }
    }

    #[test]
    fn exact_power_law_fit() {
        let series: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64, 3.0 * (i as f64).powi(2))).collect();
        let fit = fit_power_law(&series, 2.0, 0.0).unwrap();
        assert!((fit.exponent_alpha - 2.0).abs() < 1e-10);
        assert!((fit.prefactor_c - 3.0).abs() < 1e-10);
        let flat: Vec<(f64, f64)> = (1..=20).map(|i| (i as f64, 7.0)).collect();
        assert!(fit_power_law(&flat, 2.0, 0.0).unwrap().exponent_alpha.abs() < 1e-12);
        assert!(matches!(fit_power_law(&series, 2.0, 18.0), Err(ZakharovError::InsufficientData { .. })));
    }

    #[test]
    fn noisy_power_law_fit() {
        let noise = Normal::new(0.0, 0.01).unwrap();
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let series: Vec<(f64, f64)> = (1..=100)
                .map(|i| {
                    let t = i as f64 * 0.5;
                    (t, t * t * (1.0 + noise.sample(&mut rng)))
                })
                .collect();
            let fit = fit_power_law(&series, 2.0, 5.0).unwrap();
            assert!((fit.exponent_alpha - 2.0).abs() < 0.05, "seed {seed}: {}", fit.exponent_alpha);
        }
    }

    #[test]
    fn recurrence_exponents() {
        let linear = iterate_local_bound(0.5, 1.0, 2.0, 1000).unwrap();
        for (n, x) in linear.additive.iter().enumerate() {
            assert!((x - (2.0 + 0.5 * n as f64)).abs() < 1e-9);
        }
        let quad = iterate_local_bound(1.0, 0.5, 1.0, 100_000).unwrap();
        assert!((quad.additive_exponent - 2.0).abs() < 0.04, "{}", quad.additive_exponent);
        assert!(quad.multiplicative_residual < 1e-10);
        assert!((quad.multiplicative_rate - 2f64.ln()).abs() < 1e-12);
        assert!(iterate_local_bound(1.0, 0.0, 1.0, 100).is_err());
    }

    #[test]
    fn csv_round_trip_of_series() {
        let rec = DiagnosticsRecord {
            t: 1.5,
            mass: 2.0,
            hamiltonian: -0.25,
            h1_u: 3.0,
            l2_n: 0.1,
            hneg1_ndot: 0.2,
            h1_triple: 3.01,
            hs_norms: vec![(2.0, 10.0), (4.0, 100.0)],
            increment: None,
        };
        let text = write_csv(&[rec.clone(), DiagnosticsRecord { t: 2.5, ..rec }], "stamp");
        assert!(text.lines().nth(1).unwrap().ends_with("hs_2,hs_4,I_total,I1,I2,I3"));
        let series = read_series(text.as_bytes(), "hs_4").unwrap();
        assert_eq!(series, vec![(1.5, 100.0), (2.5, 100.0)]);
        assert!(read_series(text.as_bytes(), "hs_3").is_err());
    }
}
