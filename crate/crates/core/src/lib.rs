//! Sheaf-theoretic model of neighborhood-aggregating networks over finite
//! marked spaces, with checkers and witness generators for its structural
//! properties.

pub mod cech;
pub mod error;
pub mod graphs;
pub mod io;
pub mod linalg;
pub mod network;
pub mod sections;
pub mod sweep;
pub mod topology;
pub mod witnesses;

pub use error::{Error, Result};
