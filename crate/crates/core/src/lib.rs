pub mod collector;
pub mod error;
pub mod gridmap;
pub mod harness;
pub mod model;
pub mod planner;
pub mod problem;
pub mod search;
pub mod seed;
pub mod statespace;

pub use error::{Error, Result};
