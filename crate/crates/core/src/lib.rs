pub mod cli;
pub mod error;
pub mod fields;
pub mod filter_bank;
pub mod io_formats;
pub mod legendre;
pub mod needlet_transform;
pub mod pipeline;
mod rings;
pub mod scalar_harmonics;
pub mod sphere_geom;
pub mod vsh;

pub use error::{Error, Result};
