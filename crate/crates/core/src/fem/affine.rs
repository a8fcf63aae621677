use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

pub const REF_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Geometry of local edge `k`, traversed from vertex `k` to vertex `k + 1`.
#[derive(Clone, Copy, Debug)]
pub struct EdgeGeometry {
    pub start: Point,
    pub end: Point,
    pub length: f64,
    /// unit outward normal `n_T`
    pub normal: [f64; 2],
    /// unit tangent `t_T` (counterclockwise along the boundary)
    pub tangent: [f64; 2],
}

/// Affine map `x = origin + J xi` from the reference triangle.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub jacobian: Matrix2<f64>,
    pub origin: Vector2<f64>,
    pub det: f64,
    /// `J^{-T}`
    pub inv_t: Matrix2<f64>,
    pub edges: [EdgeGeometry; 3],
}

impl AffineMap {
    pub fn from_points(p: [Point; 3]) -> Option<Self> {
        let origin = Vector2::new(p[0][0], p[0][1]);
        let jacobian = Matrix2::new(p[1][0] - p[0][0], p[2][0] - p[0][0], p[1][1] - p[0][1], p[2][1] - p[0][1]);
        let det = jacobian.determinant();
        if !(det > 0.0) {
            return None;
        }
        let inv_t = jacobian.try_inverse()?.transpose();
        let edges = std::array::from_fn(|k| {
            let (a, b) = (p[k], p[(k + 1) % 3]);
            let length = (b[0] - a[0]).hypot(b[1] - a[1]);
            let tangent = [(b[0] - a[0]) / length, (b[1] - a[1]) / length];
            EdgeGeometry { start: a, end: b, length, normal: [tangent[1], -tangent[0]], tangent }
        });
        Some(AffineMap { jacobian, origin, det, inv_t, edges })
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det
    }

    pub fn map(&self, xi: [f64; 2]) -> Point {
        let x = self.origin + self.jacobian * Vector2::new(xi[0], xi[1]);
        [x[0], x[1]]
    }

    /// `grad_phys = J^{-T} grad_ref`
    pub fn push_grad(&self, g: [f64; 2]) -> [f64; 2] {
        let v = self.inv_t * Vector2::new(g[0], g[1]);
        [v[0], v[1]]
    }

    /// `H_phys = J^{-T} H_ref J^{-1}` for Hessians stored as `[xx, xy, yy]`.
    pub fn push_hessian(&self, h: [f64; 3]) -> [f64; 3] {
        let hr = Matrix2::new(h[0], h[1], h[1], h[2]);
        let hp = self.inv_t * hr * self.inv_t.transpose();
        [hp[(0, 0)], 0.5 * (hp[(0, 1)] + hp[(1, 0)]), hp[(1, 1)]]
    }

    /// Reference coordinates of the point at parameter `s` on local edge `k`.
    pub fn edge_ref_point(k: usize, s: f64) -> [f64; 2] {
        let (a, b) = (REF_VERTICES[k], REF_VERTICES[(k + 1) % 3]);
        [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]
    }
}

pub fn map_affine(mesh: &Mesh, t: usize) -> Result<AffineMap> {
    if t >= mesh.num_triangles() {
        return Err(Error::IndexOutOfRange { index: t, len: mesh.num_triangles() });
    }
    AffineMap::from_points(mesh.triangle_points(t)).ok_or(Error::DegenerateElement(t))
}
