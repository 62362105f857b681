//! Geospatial interlinking: computes every positive DE-9IM relation between a
//! source and a target dataset of LineStrings and Polygons.

pub mod batch;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod parallel;
pub mod progressive;
pub mod sweep;
pub mod tree;
pub mod workbench;

pub use error::{Error, Result};
