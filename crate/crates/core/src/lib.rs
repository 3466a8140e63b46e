//! Engagement decision support for beyond-visual-range defensive counter air.
//!
//! The crate covers the whole offline pipeline: scenario design by Latin
//! hypercube sampling ([`lhs`]), a constructive 2-v-2 simulation scored with
//! the DCA index ([`sim`], [`dca_index`]), engagement extraction and encoding
//! ([`dataset`]) and a gradient-boosted tree regressor ([`gbt`]).

pub mod dataset;
pub mod dca_index;
pub mod error;
pub mod gbt;
pub mod lhs;
pub mod pipeline;
pub mod sim;
pub mod units;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
