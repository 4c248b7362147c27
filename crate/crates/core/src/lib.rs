//! Coordinate interleaved orthogonal designs with media-based modulation.
//!
//! The crate covers the whole link: rotated PSK/QAM alphabets, the two
//! single-RF-chain space-time mappings (scheme I and scheme II), the
//! Rayleigh block-fading MBM channel, maximum-likelihood detection (brute
//! force and the symbol-by-symbol equivalent-model path), union-bound
//! error analysis, reference baselines and a reproducible Monte Carlo
//! engine together with the experiment config and CSV result formats.
//!
//! All signal-processing code is generic over the real scalar type
//! ([`Scalar`], implemented for `f32` and `f64`). The aliases at the crate
//! root fix the scalar to `f64`, which is what the experiment runner uses.

pub mod analysis;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod experiment;
pub mod constellation;
pub mod detector;
pub mod encoder;
mod error;
pub mod link;
pub mod montecarlo;
pub mod results;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use num_complex::Complex;

pub use constellation::{ModulationKind, RotatedConstellation};
pub use encoder::{CodewordSelection, Scheme, SchemeConfig, SparseCodeword, StateSelection};

/// Rotated constellation over `f64`.
pub type Constellation = constellation::RotatedConstellation<f64>;
/// Rotated constellation over `f32`.
pub type Constellation32 = constellation::RotatedConstellation<f32>;
/// Scheme configuration over `f64`.
pub type Config = encoder::SchemeConfig<f64>;
/// Scheme configuration over `f32`.
pub type Config32 = encoder::SchemeConfig<f32>;
/// Sparse transmission matrix over `f64`.
pub type Codeword = encoder::SparseCodeword<f64>;
/// MBM channel matrix over `f64`.
pub type Channel = channel::MbmChannel<f64>;
/// Received two-slot block over `f64`.
pub type Observation = channel::Received<f64>;
/// Detector output over `f64`.
pub type Decision = detector::Detection<f64>;
