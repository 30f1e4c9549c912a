// SPDX-License-Identifier: Apache-2.0

//! Isolation-aware mapping exploration for hard real-time applications on
//! tiled many-core platforms.
//!
//! The crate covers the whole flow: a problem specification ([`model`]),
//! slot-based arbitration ([`arbitration`]), worst-case timing analysis
//! ([`timing`]), budget computation ([`scheduling`]), genotype decoding and
//! objectives ([`mapping`]), evolutionary exploration ([`dse`]), a
//! slot-level simulator used to cross-check the bounds ([`simoracle`]) and a
//! synthetic benchmark generator ([`generate`]).

pub mod arbitration;
pub mod dse;
pub mod generate;
pub mod mapping;
pub mod model;
pub mod scheduling;
pub mod simoracle;
pub mod time;
pub mod timing;

pub use time::Nanos;

#[cfg(test)]
pub(crate) mod testutil;
