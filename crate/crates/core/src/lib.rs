//! Joint frame and carrier-frequency synchronization for dual-polarization
//! reduced-guard-interval coherent optical OFDM.
//!
//! The training block is a pair of Golay complementary 16-QAM sequences in an
//! Alamouti polarization-time arrangement, with the first symbol weighted by
//! a bipolar PN sequence. The same two symbols serve frame timing, a
//! fractional and integer carrier-offset estimate, and downstream channel
//! estimation.
//!
//! Modules, bottom up:
//! - [`dsp`]: transforms, the PN sequence, labelled random streams
//! - [`seqgen`]: Golay pair construction and verification
//! - [`framer`]: subcarrier layout, OFDM modulation, frame assembly
//! - [`channel`]: linear link impairments
//! - [`sync`]: the estimator
//! - [`harness`]: Monte-Carlo campaigns, traces and file formats

pub mod channel;
pub mod dsp;
pub mod error;
pub mod framer;
pub mod harness;
pub mod interchange;
pub mod seqgen;
pub mod sync;

pub use error::{Error, Result};
