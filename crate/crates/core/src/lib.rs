pub mod complex_order;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod persistence;
pub mod spanning;

pub use error::{Error, Result};
