//! Structured triangulations of rectangles, red refinement, connectivity and
//! boundary classification.
//!
//! Local edge `k` of a triangle `[a, b, c]` runs from local vertex `k` to local
//! vertex `k + 1 (mod 3)`. Every global edge is stored with its lower vertex
//! index first; its global unit normal is the tangent `lo -> hi` rotated
//! clockwise. For counterclockwise triangles this is the outward normal
//! exactly when the local edge is traversed from the lower to the higher
//! index, which is what the per-triangle orientation sign records.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interior,
    DirichletLike,
    NeumannLike,
}

/// Which parts of a rectangle's boundary carry the essential condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcLayout {
    AllDirichlet,
    /// Essential condition only on the sides `x = 0` and `x = R1`.
    LeftRightDirichlet,
}

/// Global edge index of a triangle's local edge plus its orientation sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriEdge {
    pub edge: usize,
    /// `+1.0` if the triangle's outward normal equals the edge's global normal.
    pub sign: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[TriEdge; 3]>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    edge_tags: Vec<BoundaryTag>,
    vertex_tags: Vec<BoundaryTag>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Mesh {
    /// Builds connectivity for a list of counterclockwise triangles. Boundary
    /// edges start out tagged `DirichletLike`.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let nv = vertices.len();
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());

        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement(t));
            }
            let mut local = [TriEdge { edge: 0, sign: 1.0 }; 3];
            for k in 0..3 {
                let (p, q) = (tri[k], tri[(k + 1) % 3]);
                let key = (p.min(q), p.max(q));
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                match edge_triangles[e] {
                    [None, _] => edge_triangles[e][0] = Some(t),
                    [Some(_), None] => edge_triangles[e][1] = Some(t),
                    _ => {
                        return Err(Error::InvalidMesh(format!(
                            "edge ({}, {}) shared by more than two triangles",
                            key.0, key.1
                        )))
                    }
                }
                local[k] = TriEdge { edge: e, sign: if p < q { 1.0 } else { -1.0 } };
            }
            tri_edges.push(local);
        }

        // Neighbours must traverse a shared edge in opposite directions.
        for (e, inc) in edge_triangles.iter().enumerate() {
            if let [Some(t0), Some(t1)] = *inc {
                let s0 = tri_edges[t0].iter().find(|te| te.edge == e).map(|te| te.sign);
                let s1 = tri_edges[t1].iter().find(|te| te.edge == e).map(|te| te.sign);
                if s0 == s1 {
                    return Err(Error::InvalidMesh(format!("inconsistent orientation across edge {e}")));
                }
            }
        }

        let mut mesh = Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_triangles,
            edge_tags: Vec::new(),
            vertex_tags: Vec::new(),
        };
        mesh.edge_tags = (0..mesh.edges.len())
            .map(|e| if mesh.is_boundary_edge(e) { BoundaryTag::DirichletLike } else { BoundaryTag::Interior })
            .collect();
        mesh.vertex_tags = mesh.vertex_tags_from_edges();
        Ok(mesh)
    }

    /// Uniform mesh of `(0, r1) x (0, r2)` with `ny` rows of cells and
    /// `nx = round(ny * r1 / r2)` columns, each cell cut by its
    /// lower-left-to-upper-right diagonal.
    pub fn rectangle(r1: f64, r2: f64, ny: usize) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0) || !r1.is_finite() || !r2.is_finite() {
            return Err(Error::InvalidMesh(format!("non-positive extent ({r1}, {r2})")));
        }
        if ny == 0 {
            return Err(Error::InvalidMesh("ny must be at least 1".into()));
        }
        let nx = ((ny as f64 * r1 / r2).round() as usize).max(1);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            let y = r2 * (j as f64 / ny as f64);
            for i in 0..=nx {
                vertices.push([r1 * (i as f64 / nx as f64), y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Mesh::from_triangles(vertices, triangles)
    }

    /// Red refinement: every triangle is split into four congruent children.
    /// Tags of boundary edges and vertices are inherited.
    pub fn refine_uniform(&self) -> Self {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.edges.iter().map(|&[p, q]| midpoint(self.vertices[p], self.vertices[q])));

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let m = self.tri_edges[t].map(|te| nv + te.edge);
            triangles.push([a, m[0], m[2]]);
            triangles.push([m[0], b, m[1]]);
            triangles.push([m[2], m[1], c]);
            triangles.push([m[0], m[1], m[2]]);
        }
        let mut child = Mesh::from_triangles(vertices, triangles)
            .expect("red refinement of a valid mesh is valid");

        let lookup: HashMap<[usize; 2], usize> =
            child.edges.iter().enumerate().map(|(e, &pq)| (pq, e)).collect();
        for (e, &[p, q]) in self.edges.iter().enumerate() {
            let tag = self.edge_tags[e];
            if tag == BoundaryTag::Interior {
                continue;
            }
            let m = nv + e;
            for half in [[p.min(m), p.max(m)], [q.min(m), q.max(m)]] {
                child.edge_tags[lookup[&half]] = tag;
            }
        }
        let mut vtags = self.vertex_tags.clone();
        vtags.extend(self.edge_tags.iter().copied());
        child.vertex_tags = vtags;
        child
    }

    /// Returns a copy with boundary tags set according to `layout`.
    pub fn classify_boundary(&self, layout: BcLayout) -> Result<Self> {
        let boundary: Vec<usize> = (0..self.edges.len()).filter(|&e| self.is_boundary_edge(e)).collect();
        if boundary.is_empty() {
            return Err(Error::NoBoundary);
        }
        let (lo, hi) = self.bounding_box();
        let tol = 1e-12 * (hi[0] - lo[0]).min(hi[1] - lo[1]);
        let on_x = |v: usize, x0: f64| (self.vertices[v][0] - x0).abs() <= tol;

        let mut out = self.clone();
        for &e in &boundary {
            let [p, q] = self.edges[e];
            out.edge_tags[e] = match layout {
                BcLayout::AllDirichlet => BoundaryTag::DirichletLike,
                BcLayout::LeftRightDirichlet => {
                    if (on_x(p, lo[0]) && on_x(q, lo[0])) || (on_x(p, hi[0]) && on_x(q, hi[0])) {
                        BoundaryTag::DirichletLike
                    } else {
                        BoundaryTag::NeumannLike
                    }
                }
            };
        }
        out.vertex_tags = out.vertex_tags_from_edges();
        Ok(out)
    }

    fn vertex_tags_from_edges(&self) -> Vec<BoundaryTag> {
        let mut tags = vec![BoundaryTag::Interior; self.vertices.len()];
        for (e, &[p, q]) in self.edges.iter().enumerate() {
            for v in [p, q] {
                match (self.edge_tags[e], tags[v]) {
                    (BoundaryTag::DirichletLike, _) => tags[v] = BoundaryTag::DirichletLike,
                    (BoundaryTag::NeumannLike, BoundaryTag::Interior) => tags[v] = BoundaryTag::NeumannLike,
                    _ => {}
                }
            }
        }
        tags
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn tri_edges(&self, t: usize) -> &[TriEdge; 3] {
        &self.tri_edges[t]
    }

    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_triangles[e]
    }

    pub fn edge_tag(&self, e: usize) -> BoundaryTag {
        self.edge_tags[e]
    }

    pub fn vertex_tag(&self, v: usize) -> BoundaryTag {
        self.vertex_tags[v]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e][1].is_none()
    }

    /// Vertex coordinates of triangle `t` in stored order.
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.triangle_points(t);
        (0..3)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 3]);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max)
    }

    /// `max_T diam(T)^2 / |T|`.
    pub fn shape_constant(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.diameter(t).powi(2) / self.area(t))
            .fold(0.0, f64::max)
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.diameter(t)).fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Edges incident to each vertex, in increasing edge order.
    pub fn vertex_edges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (e, &[p, q]) in self.edges.iter().enumerate() {
            out[p].push(e);
            out[q].push(e);
        }
        out
    }

    /// Plain-text dump: `vertex x y`, `tri i j k`, `edge i j tag` records.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.vertices {
            writeln!(w, "vertex {:?} {:?}", p[0], p[1])?;
        }
        for t in &self.triangles {
            writeln!(w, "tri {} {} {}", t[0], t[1], t[2])?;
        }
        for (e, &[p, q]) in self.edges.iter().enumerate() {
            let tag = match self.edge_tags[e] {
                BoundaryTag::Interior => "interior",
                BoundaryTag::DirichletLike => "dirichlet",
                BoundaryTag::NeumannLike => "neumann",
            };
            writeln!(w, "edge {p} {q} {tag}")?;
        }
        Ok(())
    }
}
