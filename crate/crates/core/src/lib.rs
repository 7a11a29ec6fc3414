pub mod atlas;
pub mod double;
pub mod equivariant;
pub mod error;
pub mod group;
pub mod gset;
pub mod linalg;
pub mod twisted;

pub use error::{Error, Result};
