//! Hamming-weight-preserving quantum convolutional networks, simulated
//! exactly inside fixed-weight subspaces.

pub mod basis;
pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod layers;
pub mod model;
pub mod oracle;
pub mod run;
pub mod sim;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
