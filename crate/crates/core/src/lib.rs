//! Rejection-sampled universal quantization (RSUQ) and its layered variant
//! (LRSUQ) over lattices, plus the entropy coder, bounds engine and
//! Monte-Carlo test harness.
//!
//! ```
//! use rsuq::{builtin_lattice, RsuqConfig};
//!
//! let lat = builtin_lattice("A2", 2).unwrap();
//! let q = RsuqConfig::new(lat, 0.5, 7).unwrap();
//! let d = q.encode(&[0.3, -1.2]).unwrap();
//! let y = q.decode(&d).unwrap();
//! assert!(((y[0] - 0.3).powi(2) + (y[1] + 1.2).powi(2)).sqrt() <= 0.5);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coding;
pub mod dither;
pub mod error;
pub mod lattice;
pub mod lrsuq;
pub mod mc;
pub mod rsuq;

pub use coding::{decode_stream, encode_stream, GolombCode, Mode, StreamHeader};
pub use coding::{decode_vectors, EncodedBatch, StreamSpec};
pub use dither::{DitherStream, LevelSource};
pub use error::{Error, Result};
pub use lattice::{builtin_lattice, Lattice, LatticePoint};
pub use lrsuq::{GaussianNoise, Lrsuq, NoiseModel};
pub use mc::{Check, InputLaw, RateEstimate, TestResult, TrialPlan};
pub use rsuq::{Description, Quantizer, RsuqConfig, SetRsuq};
