pub mod assembly;
pub mod cli;
pub mod compare;
pub mod error;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod rng;
pub mod spectral;
pub mod synthesis;
pub mod winding;

pub use error::{Error, Result};
