pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod operator;
pub mod plot;
pub mod random_fields;
pub mod stats;

pub use error::{Error, Result};
