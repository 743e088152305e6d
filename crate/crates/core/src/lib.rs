//! Through-wall radar wall-characterization toolkit.
//!
//! The crate is organized around a forward/inverse pipeline:
//!
//! * [`fdtd`] — 2D TMz finite-difference time-domain solver with CPML
//!   absorbing boundaries, used to simulate scattered fields from walls.
//! * [`wall`] — parameterized wall geometries, dataset enumeration and
//!   rasterization onto the FDTD grid and the 32x32 dielectric profile.
//! * [`pipeline`] — calibration, downsampling, phasor extraction, latent
//!   noise, dataset splitting and case-file persistence.
//! * [`nn`] — minimal reverse-mode neural network engine (dense, conv,
//!   transposed conv, dropout, Adam).
//! * [`gan`] — the adversarial inverters and single-network baselines.
//! * [`classical`] — integral-equation baselines (BP, BAM, BIM) on the
//!   32x32 contrast grid, with the method-of-moments forward solver.
//! * [`eval`] — NMSE metric, benchmark runner, robustness sweeps,
//!   measurement import and profile export.

pub mod classical;
pub mod eval;
pub mod fdtd;
pub mod gan;
pub mod nn;
pub mod pipeline;
pub mod special;
pub mod wall;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 2.997_924_58e8;
/// Permittivity of free space (F/m).
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Permeability of free space (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Source excitation frequency (Hz).
pub const F0: f64 = 2.4e9;

/// Free-space wavelength at the 2.4 GHz carrier (m).
pub fn carrier_wavelength() -> f64 {
    C0 / F0
}
