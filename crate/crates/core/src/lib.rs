//! Lie algebroids, their connections and curved Yang-Mills-Higgs gauge data on a single chart,
//! with numerical checks of the identities relating them.

pub mod algebroid;
pub mod cli;
pub mod connection;
pub mod fields;
pub mod gauge;
pub mod jets;
pub mod octonion;

mod error;
pub use error::{Error, Result};
