//! Modulo analog-to-digital conversion with blind unfolding.
//!
//! A modulo ADC folds `alpha * x` into `[0, 2^R)` before quantizing. The
//! decoders here undo the fold by predicting each sample from the past and
//! keeping the residual inside half the range: [`oracle`] with the input
//! autocorrelation known, [`blind`] learning it on the fly.

pub mod blind;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod modcore;
pub mod oracle;
pub mod signals;
pub mod trace;

pub use error::{Error, Result};
