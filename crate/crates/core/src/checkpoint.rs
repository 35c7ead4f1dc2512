//! Binary checkpoints.
//!
//! Little-endian: magic `ZKLB`, version `u32`, `N` as `u32`, `L` and `t` as
//! `f64`, then `û`, `n̂`, `n̂ₜ` as interleaved `(re, im)` `f64` pairs in
//! row-major lattice order.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Result, ZakharovError};
use crate::solver::ZakharovState;
use crate::spectral::{GridSpec, SpectralField2D};
use crate::wave::WaveState;

pub const MAGIC: &[u8; 4] = b"ZKLB";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

pub fn to_bytes(state: &ZakharovState) -> Vec<u8> {
    let grid = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 3 * 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.period().to_le_bytes());
    out.extend_from_slice(&state.t.to_le_bytes());
    for field in [&state.u_hat, &state.wave.n_hat, &state.wave.ndot_hat] {
        for c in field.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Result<[u8; K]> {
        let end = self.pos + K;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| ZakharovError::Format(format!("truncated checkpoint at byte {}", self.pos)))?;
        self.pos = end;
        Ok(slice.try_into().expect("slice length"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

/// Parses a checkpoint; `dealias` is a run setting and not stored.
pub fn from_bytes(bytes: &[u8], dealias: bool) -> Result<ZakharovState> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(ZakharovError::Format("bad magic, not a checkpoint".into()));
    }
    let version = u32::from_le_bytes(r.take()?);
    if version != VERSION {
        return Err(ZakharovError::Format(format!("unsupported checkpoint version {version}")));
    }
    let n = u32::from_le_bytes(r.take()?) as usize;
    let period = r.f64()?;
    let t = r.f64()?;
    let grid = GridSpec::new(n, period, dealias).map_err(|e| ZakharovError::Format(e.to_string()))?;
    let expected = HEADER_LEN + 3 * 16 * grid.len();
    if bytes.len() != expected {
        return Err(ZakharovError::Format(format!("checkpoint has {} bytes, expected {expected}", bytes.len())));
    }
    let mut fields = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = r.f64()?;
            let im = r.f64()?;
            coeffs.push(Complex64::new(re, im));
        }
        fields.push(SpectralField2D::from_coeffs(grid, coeffs)?);
    }
    let ndot_hat = fields.pop().expect("three fields");
    let n_hat = fields.pop().expect("three fields");
    let u_hat = fields.pop().expect("three fields");
    Ok(ZakharovState { u_hat, wave: WaveState { n_hat, ndot_hat }, t })
}

pub fn save(state: &ZakharovState, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(state))?;
    Ok(())
}

pub fn load(path: &Path, dealias: bool) -> Result<ZakharovState> {
    from_bytes(&std::fs::read(path)?, dealias)
}
