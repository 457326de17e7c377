pub mod error;
pub mod estimator;
pub mod hermite;
pub mod malliavin;
pub mod model;
pub mod oracle;
pub mod path;
pub mod rng;
pub mod sum;

pub use error::{Error, Result};
