//! Stream-level digital predistortion for single-user large-array digital
//! beamforming transmitters.
//!
//! A single injection-type DPD ahead of the baseband precoder linearizes M
//! mutually different memoryless polynomial power amplifiers by minimizing
//! the combined nonlinear distortion at the intended receiver. The crate
//! provides the full simulation chain (QAM waveform, RRC shaping, PA bank,
//! flat Rayleigh channels, matched-phase precoding), the full- and
//! reduced-complexity decorrelation learning loops, EVM/ACLR/bandwidth
//! metrics, Monte-Carlo scenario drivers, and a closed-form FLOP complexity
//! model of the competing architectures.

pub mod channel;
pub mod complexity;
pub mod dpd;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod pa;
pub mod scenarios;
pub mod signal;
pub mod spectrum;
pub mod waveform;

pub use error::{Error, Result};
pub use signal::ComplexSignal;
pub use spectrum::Spectrum;
