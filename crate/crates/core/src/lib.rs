//! Modulation recognition with lag-product features.
//!
//! Simulates RRC-shaped PSK/QAM and continuous-phase FSK bursts through a
//! block-fading channel with carrier offset, timing asynchrony and AWGN,
//! extracts three statistics of `w[k] = s[k] conj(s[k-1])`, and separates
//! CPFSK from linear modulations with a linear SVM, logistic regression or a
//! 3-10-1 network. [`oracle`] holds closed-form moments of the features for
//! noiseless signals.

pub mod channel;
pub mod classifiers;
pub mod error;
pub mod experiment;
pub mod features;
pub mod oracle;
pub mod waveform;

pub use error::{Error, Result};
