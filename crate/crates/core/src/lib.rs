//! Finite spectral triples, truncated reduced crossed products by discrete
//! groups, and numerical checks of the dual-coaction geometry.

pub mod action;
pub mod coaction;
pub mod config;
pub mod crossed;
pub mod error;
pub mod group;
pub mod linalg;
pub mod metric;
pub mod report;
pub mod suites;
pub mod triple;

pub use error::{Error, Result};
