pub mod analytic;
pub mod certify;
pub mod cli;
pub mod error;
pub mod numlin;
pub mod opbuild;
pub mod scenarios;
pub mod spaces;

pub use error::{Error, Result};
