pub mod dofs;
pub mod error;
pub mod exact;
pub mod fem;
pub mod mesh;
pub mod plate;
pub mod poisson;
pub mod solver;
pub mod study;

pub use dofs::DofMap;
pub use error::{Error, Result};
pub use mesh::{BcLayout, BoundaryTag, Mesh, Point};
