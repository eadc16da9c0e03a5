pub mod analysis;
pub mod assembly;
pub mod basis;
pub mod classical;
pub mod error;
pub mod geometry;
pub mod io;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
