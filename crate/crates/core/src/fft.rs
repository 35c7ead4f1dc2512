//! Shared FFT plans and an axis-by-axis N-dimensional transform.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Plan>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, inverse: bool) -> Plan {
    let mut cache = PLANS.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Unnormalized in-place DFT over every axis of a row-major array.
///
/// Forward uses `e^{-2πi jm/n}`, inverse `e^{+2πi jm/n}`; no scaling is applied.
pub(crate) fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "fft_nd: buffer does not match dims");
    let mut buf = Vec::new();
    let mut scratch = Vec::new();
    for (axis, &len) in dims.iter().enumerate() {
        if len <= 1 {
            continue;
        }
        let fft = plan(len, inverse);
        scratch.resize(fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        let stride: usize = dims[axis + 1..].iter().product();
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = len * stride;
        buf.resize(block, Complex64::new(0.0, 0.0));
        for chunk in data.chunks_mut(block) {
            for j in 0..len {
                let row = &chunk[j * stride..(j + 1) * stride];
                for (s, v) in row.iter().enumerate() {
                    buf[s * len + j] = *v;
                }
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..len {
                let row = &mut chunk[j * stride..(j + 1) * stride];
                for (s, v) in row.iter_mut().enumerate() {
                    *v = buf[s * len + j];
                }
            }
        }
    }
}

/// Signed lattice index for FFT storage position `i` on an axis of length `n`.
#[inline]
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Storage position of signed lattice index `m` (taken modulo `n`).
#[inline]
pub fn storage_index(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}
