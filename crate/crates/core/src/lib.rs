pub mod certificates;
pub mod error;
pub mod geometry;
pub mod lm;
pub mod measures;
pub mod moment_map;
pub mod quadrature;
pub mod real;
pub mod search;
pub mod seeding;

pub use error::{Error, Result};
