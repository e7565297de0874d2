//! Core library for an inductive six-axis force/torque sensor toolkit.
//!
//! The crate covers the full pipeline of such a sensor in software:
//!
//! * [`coil`] — closed-form inductance chain for stacked planar spiral coils:
//!   geometry → per-layer inductance → inter-layer coupling → total inductance
//!   → resonant frequency → target-induced inductance change → LDC counts.
//! * [`synth`] — a digital twin that maps applied wrenches through a linear
//!   plate-compliance model to per-coil gaps and on to noisy raw counts,
//!   producing paired (wrench, counts) datasets.
//! * [`fitting`] — four parametric curve families with analytic jacobians and
//!   a Levenberg–Marquardt solver shared by curve fitting and calibration.
//! * [`calibration`] — joint estimation of six per-channel rational maps and
//!   a 6×7 output matrix, plus the forward decode path counts → wrench.
//! * [`metrics`] — full-scale error statistics, noise-based resolution,
//!   quantization levels, and the crosstalk matrix.
//! * [`wire`] — bit-exact binary frame codec, binary log files, CSV
//!   ingestion, and a rate-controlled replay source.
//! * [`config`] — file loading for coil geometry and named presets.

pub mod calibration;
pub mod coil;
pub mod config;
pub mod error;
pub mod fitting;
pub mod metrics;
pub mod synth;
pub mod wire;

pub use error::{Error, Result};
