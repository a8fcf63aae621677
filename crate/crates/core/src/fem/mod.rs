//! Reference-element machinery: quadrature, orthonormal polynomial bases and
//! affine element maps.

pub mod affine;
pub mod basis;
pub mod quadrature;

pub use affine::{map_affine, AffineMap, EdgeGeometry};
pub use basis::{basis_p, dim_p, BasisTable, ReferenceBasis};
pub use quadrature::{quad_edge, quad_edge_composite, quad_triangle, quad_triangle_composite, QuadRule};
