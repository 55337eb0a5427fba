//! Regression toolkit for simulating BioTac 2P output channels from indenter
//! contact position and force-time windows.
//!
//! The crate is organised bottom-up:
//!
//! * [`sensor`] and [`geometry`]: channel conventions, electrode layout, skin surface.
//! * [`oracle`]: a seedable synthetic sensor used in place of recorded data.
//! * [`dataio`]: the CSV dataset format and chunked fold plans.
//! * [`calibration`]: pose-offset recovery from light-touch probes.
//! * [`features`]: the eight input window encodings and z-score scaling.
//! * [`gbt`] and [`neural`]: the regressor families.
//! * [`stats`]: metrics, cross-validated experiments, corrected t-tests, latency.

// `!(a < b)` is how validation rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod dataio;
pub mod error;
pub mod features;
pub mod gbt;
pub mod geometry;
pub mod neural;
pub mod oracle;
pub mod presets;
pub mod rng;
pub mod sensor;
pub mod stats;

pub use error::{Error, Result};
