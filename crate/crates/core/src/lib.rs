//! Pseudo-spectral simulation of the 2D Zakharov system on a periodic torus,
//! with Sobolev-growth diagnostics and numerical probes of the space-time
//! estimates (Strichartz, `X_{s,b}` bilinear bounds, the `(□⁻¹Δ)^α` calculus)
//! that control that growth.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
mod fft;
pub mod solver;
pub mod spectral;
pub mod wave;
pub mod xsb;

pub use error::{Result, ZakharovError};
