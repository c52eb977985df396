//! Recursive systematic convolutional codes over GF(2^m) with one memory
//! element, mapped onto q-ary QAM.
//!
//! The crate covers field arithmetic, the encoder and its q-state trellis,
//! Gray-labelled constellations, the truncated Euclidean distance spectrum and
//! the exhaustive code search built on it, a symbol-domain Max-Log-MAP
//! decoder, an AWGN Monte Carlo harness and CM/BICM capacity estimates.

pub mod capacity;
pub mod code;
pub mod decoder;
pub mod error;
pub mod gf;
pub mod mapping;
pub mod search;
pub mod sim;
pub mod spectrum;

pub use code::{Code, CodeCoefficients, CodeDescriptor, EncodedFrame, Trellis, TrellisEdge};
pub use error::{Error, Result};
pub use gf::{FieldDescriptor, FieldElement, FieldSpec};
pub use mapping::{BpskImage, Constellation, SqDistance};
pub use spectrum::{compute_spectrum, DcPair, DistanceSpectrum, MultiplicityConvention};
pub use decoder::{max_log_map_decode, BranchMetrics, DecoderOptions, SymbolPosteriors, Termination};
pub use search::{search_codes, SearchReport, SearchStrategy};
pub use sim::{run_monte_carlo, Modulation, SimConfig, SimReport, StopRule};
pub use capacity::{capacity_point, snr_gap_at_rate, CapacityCurve, CapacityPoint, Estimate};
