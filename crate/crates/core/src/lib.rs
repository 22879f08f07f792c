//! Closed-form latent steering for hierarchical generators.

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod io;
pub mod npy;
pub mod operators;
pub mod principal;
pub mod rng;
pub mod toygen;
pub mod transfer;
pub mod verify;
pub mod walks;
pub mod weights;

pub use error::{Error, Result};
