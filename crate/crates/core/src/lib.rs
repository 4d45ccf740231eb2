pub mod bench;
pub mod cli;
pub mod error;
pub mod evaluator;
pub mod geometry;
pub mod generators;
pub mod grid;
pub mod policy;
pub mod scene;
pub mod seed;
pub mod validate;

pub use error::{Error, Result};
