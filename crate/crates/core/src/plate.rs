//! Ultraweak Kirchhoff-Love plate formulation with lowest-order trial spaces.
//!
//! Trial unknowns per element: deflection `u` (P0) and bending moment `M`
//! (symmetric P0). On the skeleton, the deflection trace `û` is the Hermite
//! cubic interpolant of vertex values and gradients, with normal slope
//! interpolated linearly. The moment trace `m̂` carries per edge a constant
//! normal moment `m_nn`, a constant effective shear `q_eff`, and the twist
//! moment `t·Mn` at both endpoints, which enters through corner terms.
//!
//! Test space `P3 x P4_sym` on each element; `C` is the identity.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dofs::DofMap;
use crate::error::{Error, Result};
use crate::exact::SmoothField;
use crate::fem::affine::REF_VERTICES;
use crate::fem::{map_affine, quad_edge, quad_triangle, quad_triangle_composite, AffineMap, BasisTable, QuadRule, ReferenceBasis};
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::solver::{condense_local, CondensedLocal, LocalSystem};

pub const V_DEGREE: usize = 3;
pub const Q_DEGREE: usize = 4;
const NV: usize = 10;
const NQ: usize = 15;
/// `v` (10) and the three components `Q11, Q12, Q22` (15 each)
pub const N_TEST: usize = NV + 3 * NQ;
/// `u`, `M` (3), `(w, w_x, w_y)` at 3 vertices, `(m_nn, q_eff, a_lo, a_hi)` on 3 edges
pub const N_TRIAL: usize = 4 + 9 + 12;

const VOLUME_DEGREE: usize = 2 * Q_DEGREE;
const EDGE_DEGREE: usize = 2 * Q_DEGREE;
const LOAD_DEGREE: usize = 10;
/// `Δ²u` oscillates more than the trial space resolves; split the load rule.
const LOAD_SPLIT: usize = 4;

/// Weight of each stored component in `Q : δQ` (the off-diagonal counts twice).
const COMPONENT_WEIGHT: [f64; 3] = [1.0, 2.0, 1.0];

/// A trial state restricted to one element. Edge quantities live on local
/// edge `k` at parameter `s` (from vertex `k` to `k + 1`) with physical
/// point `x`; normals and tangents are those of this element.
pub trait PlateTrial {
    fn u(&self, _x: Point) -> f64 {
        0.0
    }
    /// `[M11, M12, M22]`
    fn moment(&self, _x: Point) -> [f64; 3] {
        [0.0; 3]
    }
    fn deflection(&self, _k: usize, _s: f64, _x: Point) -> f64 {
        0.0
    }
    /// `[∂_n û, ∂_t û]`
    fn slopes(&self, _k: usize, _s: f64, _x: Point) -> [f64; 2] {
        [0.0; 2]
    }
    /// `n·M n`
    fn normal_moment(&self, _k: usize, _s: f64, _x: Point) -> f64 {
        0.0
    }
    /// `n·div M + ∂_t(t·M n)`
    fn shear(&self, _k: usize, _s: f64, _x: Point) -> f64 {
        0.0
    }
    /// `t·M n` at the start (`end = 0`) or end (`end = 1`) of edge `k`
    fn twist(&self, _k: usize, _end: usize) -> f64 {
        0.0
    }
}

fn hermite(s: f64) -> ([f64; 4], [f64; 4]) {
    let (s2, s3) = (s * s, s * s * s);
    (
        [1.0 - 3.0 * s2 + 2.0 * s3, s - 2.0 * s2 + s3, 3.0 * s2 - 2.0 * s3, -s2 + s3],
        [-6.0 * s + 6.0 * s2, 1.0 - 4.0 * s + 3.0 * s2, 6.0 * s - 6.0 * s2, -2.0 * s + 3.0 * s2],
    )
}

/// Basis function `index` of the local trial space.
struct Column<'a> {
    index: usize,
    map: &'a AffineMap,
    signs: [f64; 3],
}

impl Column<'_> {
    /// `(local vertex, [w, w_x, w_y])` for the trace columns
    fn vertex_data(&self) -> Option<(usize, [f64; 3])> {
        let i = self.index.checked_sub(4).filter(|&i| i < 9)?;
        let mut data = [0.0; 3];
        data[i % 3] = 1.0;
        Some((i / 3, data))
    }

    /// `(local edge, component)` for the moment-trace columns
    fn edge_data(&self, k: usize) -> Option<usize> {
        let i = self.index.checked_sub(13)?;
        (i / 4 == k).then_some(i % 4)
    }
}

impl PlateTrial for Column<'_> {
    fn u(&self, _x: Point) -> f64 {
        if self.index == 0 {
            1.0
        } else {
            0.0
        }
    }
    fn moment(&self, _x: Point) -> [f64; 3] {
        let mut m = [0.0; 3];
        if (1..4).contains(&self.index) {
            m[self.index - 1] = 1.0;
        }
        m
    }
    fn deflection(&self, k: usize, s: f64, _x: Point) -> f64 {
        let Some((i, [w, gx, gy])) = self.vertex_data() else { return 0.0 };
        let e = &self.map.edges[k];
        let gt = e.length * (gx * e.tangent[0] + gy * e.tangent[1]);
        let (h, _) = hermite(s);
        if i == k {
            h[0] * w + h[1] * gt
        } else if i == (k + 1) % 3 {
            h[2] * w + h[3] * gt
        } else {
            0.0
        }
    }
    fn slopes(&self, k: usize, s: f64, _x: Point) -> [f64; 2] {
        let Some((i, [w, gx, gy])) = self.vertex_data() else { return [0.0; 2] };
        let e = &self.map.edges[k];
        let gt = e.length * (gx * e.tangent[0] + gy * e.tangent[1]);
        let gn = gx * e.normal[0] + gy * e.normal[1];
        let (_, dh) = hermite(s);
        if i == k {
            [(1.0 - s) * gn, (dh[0] * w + dh[1] * gt) / e.length]
        } else if i == (k + 1) % 3 {
            [s * gn, (dh[2] * w + dh[3] * gt) / e.length]
        } else {
            [0.0; 2]
        }
    }
    fn normal_moment(&self, k: usize, _s: f64, _x: Point) -> f64 {
        if self.edge_data(k) == Some(0) {
            1.0
        } else {
            0.0
        }
    }
    fn shear(&self, k: usize, _s: f64, _x: Point) -> f64 {
        if self.edge_data(k) == Some(1) {
            self.signs[k]
        } else {
            0.0
        }
    }
    fn twist(&self, k: usize, end: usize) -> f64 {
        // the start of the edge is its lower global vertex iff sign = +1
        let at_lo = (end == 0) == (self.signs[k] > 0.0);
        match self.edge_data(k) {
            Some(2) if at_lo => 1.0,
            Some(3) if !at_lo => 1.0,
            _ => 0.0,
        }
    }
}

/// Traces of a smooth deflection `w` with `M = -∇∇w` on one element.
pub struct SmoothPlateState<'a> {
    pub map: &'a AffineMap,
    pub field: &'a dyn SmoothField,
}

impl SmoothPlateState<'_> {
    /// `a^T M b` for `M = -∇∇w`
    fn m_form(&self, x: Point, a: [f64; 2], b: [f64; 2]) -> f64 {
        let h = self.field.hessian(x);
        -(a[0] * (h[0] * b[0] + h[1] * b[1]) + a[1] * (h[1] * b[0] + h[2] * b[1]))
    }
}

impl PlateTrial for SmoothPlateState<'_> {
    fn u(&self, x: Point) -> f64 {
        self.field.value(x)
    }
    fn moment(&self, x: Point) -> [f64; 3] {
        self.field.hessian(x).map(|h| -h)
    }
    fn deflection(&self, _k: usize, _s: f64, x: Point) -> f64 {
        self.field.value(x)
    }
    fn slopes(&self, k: usize, _s: f64, x: Point) -> [f64; 2] {
        let e = &self.map.edges[k];
        let g = self.field.grad(x);
        [g[0] * e.normal[0] + g[1] * e.normal[1], g[0] * e.tangent[0] + g[1] * e.tangent[1]]
    }
    fn normal_moment(&self, k: usize, _s: f64, x: Point) -> f64 {
        let n = self.map.edges[k].normal;
        self.m_form(x, n, n)
    }
    fn shear(&self, k: usize, _s: f64, x: Point) -> f64 {
        let e = &self.map.edges[k];
        let (n, t) = (e.normal, e.tangent);
        let d = self.field.third(x);
        // third derivative w_abc, indexed by the number of y-derivatives
        let w3 = |a: usize, b: usize, c: usize| d[a + b + c];
        let mut div_n = 0.0;
        let mut dt_twist = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                // (div M)_a = sum_b d_b M_ab = -sum_b w_abb
                div_n -= n[a] * w3(a, b, b);
                for c in 0..2 {
                    dt_twist -= t[a] * n[b] * t[c] * w3(a, b, c);
                }
            }
        }
        div_n + dt_twist
    }
    fn twist(&self, k: usize, end: usize) -> f64 {
        let e = &self.map.edges[k];
        let x = if end == 0 { e.start } else { e.end };
        self.m_form(x, e.tangent, e.normal)
    }
}

/// The four constituents of the scaled Gram matrix,
/// `G_d = d^-4 m_v + k_hess + m_q + d^4 k_ddiv`.
#[derive(Clone, Debug)]
pub struct GramParts {
    pub m_v: DMatrix<f64>,
    pub k_hess: DMatrix<f64>,
    pub m_q: DMatrix<f64>,
    pub k_ddiv: DMatrix<f64>,
}

impl GramParts {
    pub fn combine(&self, d: f64) -> DMatrix<f64> {
        let d4 = d.powi(4);
        &self.m_v / d4 + &self.k_hess + &self.m_q + &self.k_ddiv * d4
    }
}

/// Reference tables shared by all elements.
pub struct PlateElement {
    vol: QuadRule<[f64; 2]>,
    vol_v: BasisTable,
    vol_q: BasisTable,
    edge: QuadRule<f64>,
    edge_v: Vec<BasisTable>,
    edge_q: Vec<BasisTable>,
    vertex_v: BasisTable,
    load: QuadRule<[f64; 2]>,
    load_v: BasisTable,
}

/// Index of test function `i` of tensor component `c`.
fn q_index(c: usize, i: usize) -> usize {
    NV + NQ * c + i
}

impl PlateElement {
    pub fn new() -> Result<Self> {
        Self::with_rules(
            quad_triangle(VOLUME_DEGREE)?,
            quad_edge(EDGE_DEGREE)?,
            quad_triangle_composite(LOAD_DEGREE, LOAD_SPLIT)?,
        )
    }

    pub fn with_rules(vol: QuadRule<[f64; 2]>, edge: QuadRule<f64>, load: QuadRule<[f64; 2]>) -> Result<Self> {
        let bv = ReferenceBasis::new(V_DEGREE)?;
        let bq = ReferenceBasis::new(Q_DEGREE)?;
        let edge_pts: Vec<Vec<[f64; 2]>> = (0..3)
            .map(|k| edge.points.iter().map(|&s| AffineMap::edge_ref_point(k, s)).collect())
            .collect();
        Ok(PlateElement {
            vol_v: bv.tabulate(&vol.points),
            vol_q: bq.tabulate(&vol.points),
            edge_v: edge_pts.iter().map(|p| bv.tabulate(p)).collect(),
            edge_q: edge_pts.iter().map(|p| bq.tabulate(p)).collect(),
            vertex_v: bv.tabulate(&REF_VERTICES),
            load_v: bv.tabulate(&load.points),
            vol,
            edge,
            load,
        })
    }

    pub fn shared() -> &'static PlateElement {
        static SHARED: OnceLock<PlateElement> = OnceLock::new();
        SHARED.get_or_init(|| PlateElement::new().expect("default degrees are supported"))
    }

    pub fn gram_parts(&self, map: &AffineMap) -> GramParts {
        let mut m_v = DMatrix::zeros(N_TEST, N_TEST);
        let mut k_hess = DMatrix::zeros(N_TEST, N_TEST);
        let mut m_q = DMatrix::zeros(N_TEST, N_TEST);
        let mut k_ddiv = DMatrix::zeros(N_TEST, N_TEST);
        for (q, &w) in self.vol.weights.iter().enumerate() {
            let w = w * map.det;
            let phi = &self.vol_v.values[q];
            let hv: Vec<[f64; 3]> = self.vol_v.hessians[q].iter().map(|&h| map.push_hessian(h)).collect();
            for i in 0..NV {
                for j in 0..NV {
                    m_v[(i, j)] += w * phi[i] * phi[j];
                    k_hess[(i, j)] +=
                        w * (hv[i][0] * hv[j][0] + 2.0 * hv[i][1] * hv[j][1] + hv[i][2] * hv[j][2]);
                }
            }
            let psi = &self.vol_q.values[q];
            let hq: Vec<[f64; 3]> = self.vol_q.hessians[q].iter().map(|&h| map.push_hessian(h)).collect();
            // div div of the component-c test function
            let ddiv: Vec<f64> = (0..3)
                .flat_map(|c| hq.iter().map(move |h| if c == 1 { 2.0 * h[1] } else { h[if c == 0 { 0 } else { 2 }] }))
                .collect();
            for c in 0..3 {
                for i in 0..NQ {
                    for j in 0..NQ {
                        m_q[(q_index(c, i), q_index(c, j))] += w * COMPONENT_WEIGHT[c] * psi[i] * psi[j];
                    }
                }
            }
            for a in 0..3 * NQ {
                for b in 0..3 * NQ {
                    k_ddiv[(NV + a, NV + b)] += w * ddiv[a] * ddiv[b];
                }
            }
        }
        GramParts { m_v, k_hess, m_q, k_ddiv }
    }

    pub fn gram(&self, map: &AffineMap, d: f64) -> DMatrix<f64> {
        self.gram_parts(map).combine(d)
    }

    /// `b(state, e_j)` for every test basis function `e_j`.
    pub fn form(&self, map: &AffineMap, state: &dyn PlateTrial) -> DVector<f64> {
        let mut out = DVector::zeros(N_TEST);
        for (q, (xi, w)) in self.vol.iter().enumerate() {
            let x = map.map(*xi);
            let w = w * map.det;
            let u = state.u(x);
            let m = state.moment(x);
            // (M, ∇∇v); a general material law would apply C^{-1} to M here
            for i in 0..NV {
                let h = map.push_hessian(self.vol_v.hessians[q][i]);
                out[i] += w * (m[0] * h[0] + 2.0 * m[1] * h[1] + m[2] * h[2]);
            }
            // (M, Q) + (u, div div Q)
            for i in 0..NQ {
                let psi = self.vol_q.values[q][i];
                let h = map.push_hessian(self.vol_q.hessians[q][i]);
                out[q_index(0, i)] += w * (m[0] * psi + u * h[0]);
                out[q_index(1, i)] += w * (2.0 * m[1] * psi + 2.0 * u * h[1]);
                out[q_index(2, i)] += w * (m[2] * psi + u * h[2]);
            }
        }
        for (k, e) in map.edges.iter().enumerate() {
            let (n, t) = (e.normal, e.tangent);
            for (q, (&s, w)) in self.edge.iter().enumerate() {
                let x = map.map(AffineMap::edge_ref_point(k, s));
                let w = w * e.length;
                let uh = state.deflection(k, s, x);
                let [dn, dt] = state.slopes(k, s, x);
                let mnn = state.normal_moment(k, s, x);
                let shear = state.shear(k, s, x);
                // + <m̂, v>: shear against v, normal moment against ∂_n v
                for i in 0..NV {
                    let phi = self.edge_v[k].values[q][i];
                    let g = map.push_grad(self.edge_v[k].grads[q][i]);
                    out[i] += w * (shear * phi - mnn * (g[0] * n[0] + g[1] * n[1]));
                }
                // - <û, Q> = -∫ û n·div Q - (n·Qn) ∂_n û - (t·Qn) ∂_t û
                for i in 0..NQ {
                    let psi = self.edge_q[k].values[q][i];
                    let g = map.push_grad(self.edge_q[k].grads[q][i]);
                    let pair = |ndiv: f64, nqn: f64, tqn: f64| uh * ndiv - dn * nqn * psi - dt * tqn * psi;
                    out[q_index(0, i)] -= w * pair(n[0] * g[0], n[0] * n[0], t[0] * n[0]);
                    out[q_index(1, i)] -= w * pair(n[0] * g[1] + n[1] * g[0], 2.0 * n[0] * n[1], t[0] * n[1] + t[1] * n[0]);
                    out[q_index(2, i)] -= w * pair(n[1] * g[1], n[1] * n[1], t[1] * n[1]);
                }
            }
            // corner terms -[t·Mn v] from start to end of the edge
            let (a0, a1) = (state.twist(k, 0), state.twist(k, 1));
            for i in 0..NV {
                out[i] -= a1 * self.vertex_v.values[(k + 1) % 3][i] - a0 * self.vertex_v.values[k][i];
            }
        }
        out
    }

    /// Columns ordered `u, M11, M12, M22`, then `(w, w_x, w_y)` per local
    /// vertex, then `(m_nn, q_eff, a_lo, a_hi)` per local edge.
    pub fn local_b(&self, map: &AffineMap, signs: [f64; 3]) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(N_TEST, N_TRIAL);
        for index in 0..N_TRIAL {
            b.set_column(index, &self.form(map, &Column { index, map, signs }));
        }
        b
    }

    /// `-(f, v)` for the `v` tests; the `Q` block is zero.
    pub fn load(&self, map: &AffineMap, f: &dyn Fn(Point) -> f64) -> DVector<f64> {
        let mut l = DVector::zeros(N_TEST);
        for (q, (xi, w)) in self.load.iter().enumerate() {
            let fx = w * map.det * f(map.map(*xi));
            for i in 0..NV {
                l[i] -= fx * self.load_v.values[q][i];
            }
        }
        l
    }
}

pub fn local_gram_plate(map: &AffineMap, d: f64) -> DMatrix<f64> {
    PlateElement::shared().gram(map, d)
}

pub fn local_b_plate(map: &AffineMap, signs: [f64; 3]) -> DMatrix<f64> {
    PlateElement::shared().local_b(map, signs)
}

pub fn local_load_plate(map: &AffineMap, f: &dyn Fn(Point) -> f64) -> DVector<f64> {
    PlateElement::shared().load(map, f)
}

pub fn local_system(mesh: &Mesh, t: usize, d: f64, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<LocalSystem> {
    let el = PlateElement::shared();
    let map = map_affine(mesh, t)?;
    let te = mesh.tri_edges(t);
    let signs = [te[0].sign, te[1].sign, te[2].sign];
    LocalSystem::new(el.gram(&map, d), el.local_b(&map, signs), el.load(&map, f))
}

pub fn condensed_systems(mesh: &Mesh, d: f64, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<CondensedLocal>> {
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| condense_local(&local_system(mesh, t, d, f)?, t, d))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlateBc {
    /// `u = ∇u = 0` on the whole boundary
    Clamped,
    /// `u = 0` and `n·Mn = 0` on the whole boundary
    SimplySupported,
    /// clamped on Dirichlet-tagged parts, free (`n·Mn = 0`, `q_eff = 0`,
    /// no twist jump at vertices) on Neumann-tagged parts
    MixedFree,
}

/// Raw unknown numbering: fields by triangle, then vertex triples, then
/// edge quadruples.
#[derive(Clone, Copy, Debug)]
pub struct PlateLayout {
    pub triangles: usize,
    pub vertices: usize,
    pub edges: usize,
}

impl PlateLayout {
    pub fn of(mesh: &Mesh) -> Self {
        PlateLayout { triangles: mesh.num_triangles(), vertices: mesh.num_vertices(), edges: mesh.num_edges() }
    }

    pub fn num_raw(&self) -> usize {
        4 * self.triangles + 3 * self.vertices + 4 * self.edges
    }

    pub fn u(&self, t: usize) -> usize {
        4 * t
    }

    /// `c` in `0..3` for `M11, M12, M22`
    pub fn moment(&self, t: usize, c: usize) -> usize {
        4 * t + 1 + c
    }

    /// `r` in `0..3` for `w, w_x, w_y`
    pub fn trace(&self, v: usize, r: usize) -> usize {
        4 * self.triangles + 3 * v + r
    }

    pub fn normal_moment(&self, e: usize) -> usize {
        4 * self.triangles + 3 * self.vertices + 4 * e
    }

    pub fn shear(&self, e: usize) -> usize {
        self.normal_moment(e) + 1
    }

    /// twist of edge `e` at its lower (`hi = false`) or higher global vertex
    pub fn twist(&self, e: usize, hi: bool) -> usize {
        self.normal_moment(e) + 2 + hi as usize
    }
}

/// Constraint set with corner twists as unknowns.
pub fn dof_map_plate(mesh: &Mesh, bc: PlateBc) -> Result<DofMap> {
    dof_map_plate_with(mesh, bc, true)
}

/// With `corner_twists = false` every twist unknown is eliminated, leaving
/// only the per-edge `(m_nn, q_eff)` pair.
///
/// The corner terms only see differences of twists meeting at a vertex, so
/// one twist per vertex is fixed to zero. At free boundary vertices the two
/// boundary twists are both fixed, which encodes the vanishing twist jump.
pub fn dof_map_plate_with(mesh: &Mesh, bc: PlateBc, corner_twists: bool) -> Result<DofMap> {
    let lay = PlateLayout::of(mesh);
    let mut elems = Vec::with_capacity(N_TRIAL * lay.triangles);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        elems.push(lay.u(t));
        elems.extend((0..3).map(|c| lay.moment(t, c)));
        for &v in tri {
            elems.extend((0..3).map(|r| lay.trace(v, r)));
        }
        for te in mesh.tri_edges(t) {
            let e = te.edge;
            elems.extend([lay.normal_moment(e), lay.shear(e), lay.twist(e, false), lay.twist(e, true)]);
        }
    }

    let mut fixed = vec![false; lay.num_raw()];
    let boundary_vertex = |v: usize| mesh.vertex_tag(v) != BoundaryTag::Interior;
    match bc {
        PlateBc::Clamped => {
            for v in (0..lay.vertices).filter(|&v| boundary_vertex(v)) {
                (0..3).for_each(|r| fixed[lay.trace(v, r)] = true);
            }
        }
        PlateBc::SimplySupported => {
            for e in (0..lay.edges).filter(|&e| mesh.is_boundary_edge(e)) {
                let [a, b] = mesh.edges()[e];
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
                // t·∇w = 0 along the edge; only axis-parallel edges occur
                let r = if pa[1] == pb[1] {
                    1
                } else if pa[0] == pb[0] {
                    2
                } else {
                    return Err(Error::InvalidMesh(format!("boundary edge {e} is not axis-parallel")));
                };
                for v in [a, b] {
                    fixed[lay.trace(v, 0)] = true;
                    fixed[lay.trace(v, r)] = true;
                }
                fixed[lay.normal_moment(e)] = true;
            }
        }
        PlateBc::MixedFree => {
            for v in (0..lay.vertices).filter(|&v| mesh.vertex_tag(v) == BoundaryTag::DirichletLike) {
                (0..3).for_each(|r| fixed[lay.trace(v, r)] = true);
            }
            for e in (0..lay.edges).filter(|&e| mesh.edge_tag(e) == BoundaryTag::NeumannLike) {
                fixed[lay.normal_moment(e)] = true;
                fixed[lay.shear(e)] = true;
            }
        }
    }

    if corner_twists {
        let edges = mesh.edges();
        for (v, incident) in mesh.vertex_edges().iter().enumerate() {
            let twist_at = |e: usize| lay.twist(e, edges[e][1] == v);
            if bc == PlateBc::MixedFree && mesh.vertex_tag(v) == BoundaryTag::NeumannLike {
                for &e in incident.iter().filter(|&&e| mesh.is_boundary_edge(e)) {
                    fixed[twist_at(e)] = true;
                }
            } else if let Some(&e) = incident.iter().min() {
                fixed[twist_at(e)] = true;
            }
        }
    } else {
        for e in 0..lay.edges {
            fixed[lay.twist(e, false)] = true;
            fixed[lay.twist(e, true)] = true;
        }
    }
    DofMap::new(lay.num_raw(), N_TRIAL, elems, &fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ExactBundle, Factor, Separable};
    use crate::fem::quad_edge_composite;
    use crate::mesh::BcLayout;
    use std::f64::consts::PI;

    fn some_map() -> AffineMap {
        AffineMap::from_points([[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]]).unwrap()
    }

    fn fine_element() -> PlateElement {
        PlateElement::with_rules(
            quad_triangle_composite(10, 4).unwrap(),
            quad_edge_composite(15, 4).unwrap(),
            quad_triangle_composite(10, 4).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn gram_is_literal_sum_of_parts() {
        let el = PlateElement::new().unwrap();
        let map = some_map();
        let p = el.gram_parts(&map);
        for d in [1.0, 0.5, 10.0] {
            let g = el.gram(&map, d);
            let d4 = d.powi(4);
            let lit = &p.m_v * (1.0 / d4) + &p.k_hess + &p.m_q + &p.k_ddiv * d4;
            assert!((&g - &lit).abs().max() <= 1e-14 * g.abs().max());
            assert!((&g - g.transpose()).abs().max() <= 1e-12 * g.abs().max());
            assert!(g.clone().cholesky().is_some(), "d = {d}");
        }
        let g = el.gram(&map, 2.0);
        let phi0 = 2f64.sqrt();
        assert!((g[(0, 0)] / (phi0 * phi0) - map.area() / 16.0).abs() < 1e-14);
        assert_eq!(g.view((0, NV), (NV, 3 * NQ)).abs().max(), 0.0);
    }

    #[test]
    fn trivial_columns() {
        let el = PlateElement::new().unwrap();
        let map = some_map();
        let signs = [-1.0, 1.0, 1.0];
        let b = el.local_b(&map, signs);
        let phi0 = 2f64.sqrt();
        for k in 0..3 {
            // q_eff on edge k against v = 1
            assert!((b[(0, 13 + 4 * k + 1)] / phi0 - signs[k] * map.edges[k].length).abs() < 1e-13);
            // m_nn against v = 1: no contribution
            assert!(b[(0, 13 + 4 * k)].abs() < 1e-13);
            // twists against v = 1: the two endpoints cancel within the edge
            // only when both are set; a single one gives -+1
            let lo = b[(0, 13 + 4 * k + 2)] / phi0;
            let hi = b[(0, 13 + 4 * k + 3)] / phi0;
            let (start, end) = if signs[k] > 0.0 { (lo, hi) } else { (hi, lo) };
            assert!((start - 1.0).abs() < 1e-13 && (end + 1.0).abs() < 1e-13);
        }
        struct Nothing;
        impl PlateTrial for Nothing {}
        assert_eq!(el.form(&map, &Nothing).norm(), 0.0);
    }

    /// Centred monomials `dx^a dy^b` with value and Hessian.
    fn monomials(p: usize, c: Point, x: Point) -> Vec<(f64, [f64; 3])> {
        let pw = |t: f64, k: i32| if k < 0 { 0.0 } else { t.powi(k) };
        let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
        (0..=p as i32)
            .flat_map(|t| (0..=t).map(move |a| (a, t - a)))
            .map(|(a, b)| {
                let (fa, fb) = (a as f64, b as f64);
                (
                    pw(dx, a) * pw(dy, b),
                    [
                        fa * (fa - 1.0) * pw(dx, a - 2) * pw(dy, b),
                        fa * fb * pw(dx, a - 1) * pw(dy, b - 1),
                        fb * (fb - 1.0) * pw(dx, a) * pw(dy, b - 2),
                    ],
                )
            })
            .collect()
    }

    /// Rows express the basis of degree `p` in centred monomials, fitted on
    /// an affine copy of the principal lattice.
    fn basis_in_monomials(p: usize, map: &AffineMap) -> DMatrix<f64> {
        let pts: Vec<Point> = (0..=p)
            .flat_map(|i| (0..=p - i).map(move |j| [0.05 + 0.9 * i as f64 / p as f64, 0.05 + 0.9 * j as f64 / p as f64]))
            .collect();
        let n = pts.len();
        let c = map.map([1.0 / 3.0, 1.0 / 3.0]);
        let tab = ReferenceBasis::new(p).unwrap().tabulate(&pts);
        let vm = DMatrix::from_fn(n, n, |k, j| monomials(p, c, map.map(pts[k]))[j].0);
        let vphi = DMatrix::from_fn(n, n, |k, i| tab.values[k][i]);
        vm.lu().solve(&vphi).unwrap().transpose()
    }

    #[test]
    fn gram_matches_monomial_oracle() {
        let map = some_map();
        let c = map.map([1.0 / 3.0, 1.0 / 3.0]);
        let d: f64 = 3.0;
        // monomial-space blocks: v (10), then three Q components (15 each)
        let mut gm = DMatrix::zeros(N_TEST, N_TEST);
        for (xi, w) in quad_triangle(10).unwrap().iter() {
            let x = map.map(*xi);
            let w = w * map.det;
            let mv = monomials(3, c, x);
            for i in 0..NV {
                for j in 0..NV {
                    let (hi, hj) = (mv[i].1, mv[j].1);
                    gm[(i, j)] += w
                        * (mv[i].0 * mv[j].0 / d.powi(4)
                            + hi[0] * hj[0]
                            + 2.0 * hi[1] * hj[1]
                            + hi[2] * hj[2]);
                }
            }
            let mq = monomials(4, c, x);
            let ddiv = |comp: usize, m: &(f64, [f64; 3])| match comp {
                0 => m.1[0],
                1 => 2.0 * m.1[1],
                _ => m.1[2],
            };
            for ca in 0..3 {
                for cb in 0..3 {
                    for i in 0..NQ {
                        for j in 0..NQ {
                            let mut v = d.powi(4) * ddiv(ca, &mq[i]) * ddiv(cb, &mq[j]);
                            if ca == cb {
                                v += [1.0, 2.0, 1.0][ca] * mq[i].0 * mq[j].0;
                            }
                            gm[(NV + NQ * ca + i, NV + NQ * cb + j)] += w * v;
                        }
                    }
                }
            }
        }
        let mut t = DMatrix::zeros(N_TEST, N_TEST);
        t.view_mut((0, 0), (NV, NV)).copy_from(&basis_in_monomials(3, &map));
        let t4 = basis_in_monomials(4, &map);
        for comp in 0..3 {
            t.view_mut((NV + NQ * comp, NV + NQ * comp), (NQ, NQ)).copy_from(&t4);
        }
        let oracle = &t * gm * t.transpose();
        let g = PlateElement::new().unwrap().gram(&map, d);
        let rel = (&g - &oracle).abs().max() / oracle.abs().max();
        assert!(rel <= 1e-11, "{rel:e}");
    }

    #[test]
    fn load_matches_fine_quadrature() {
        let u = Separable::new(Factor::SineSquared(PI), Factor::SineSquared(PI));
        let ex = ExactBundle::plate(u);
        let map = some_map();
        let l = PlateElement::new().unwrap().load(&map, &|x| ex.f(x));
        let fine = quad_triangle_composite(10, 8).unwrap();
        let pts: Vec<Point> = fine.iter().map(|(p, _)| *p).collect();
        let tab = ReferenceBasis::new(V_DEGREE).unwrap().tabulate(&pts);
        for i in 0..NV {
            let reference: f64 = fine.iter().enumerate().map(|(k, (p, w))| -w * map.det * ex.f(map.map(*p)) * tab.values[k][i]).sum();
            assert!((l[i] - reference).abs() <= 1e-9 * l.abs().max(), "{i}: {} vs {reference}", l[i]);
        }
    }

    #[test]
    fn load_values() {
        let el = PlateElement::new().unwrap();
        let map = some_map();
        let l = el.load(&map, &|_| 1.0);
        assert!((l[0] / 2f64.sqrt() + map.area()).abs() < 1e-14);
        assert_eq!(l.rows(NV, 3 * NQ).abs().max(), 0.0);
        assert_eq!(el.load(&map, &|_| 0.0).norm(), 0.0);
    }

    /// The trace columns applied to nodal data of a global quadratic must
    /// reproduce the traces of that quadratic exactly.
    #[test]
    fn trace_columns_reproduce_quadratics() {
        let el = PlateElement::new().unwrap();
        let map = some_map();
        let b = el.local_b(&map, [1.0, 1.0, 1.0]);
        struct Quad;
        impl SmoothField for Quad {
            fn value(&self, x: Point) -> f64 {
                1.0 + 0.5 * x[0] - x[1] + 0.3 * x[0] * x[0] + 0.7 * x[0] * x[1] - 0.2 * x[1] * x[1]
            }
            fn grad(&self, x: Point) -> [f64; 2] {
                [0.5 + 0.6 * x[0] + 0.7 * x[1], -1.0 + 0.7 * x[0] - 0.4 * x[1]]
            }
            fn hessian(&self, _x: Point) -> [f64; 3] {
                [0.6, 0.7, -0.4]
            }
            fn third(&self, _x: Point) -> [f64; 4] {
                [0.0; 4]
            }
        }
        let field = Quad;
        let mut x = DVector::zeros(N_TRIAL);
        let pts = [map.edges[0].start, map.edges[1].start, map.edges[2].start];
        for (i, p) in pts.iter().enumerate() {
            let g = field.grad(*p);
            x[4 + 3 * i] = field.value(*p);
            x[5 + 3 * i] = g[0];
            x[6 + 3 * i] = g[1];
        }
        // only the trace part of the smooth state
        struct TraceOnly<'a>(SmoothPlateState<'a>);
        impl PlateTrial for TraceOnly<'_> {
            fn deflection(&self, k: usize, s: f64, x: Point) -> f64 {
                self.0.deflection(k, s, x)
            }
            fn slopes(&self, k: usize, s: f64, x: Point) -> [f64; 2] {
                self.0.slopes(k, s, x)
            }
        }
        let expect = el.form(&map, &TraceOnly(SmoothPlateState { map: &map, field: &field }));
        let got = &b * &x;
        assert!((&got - &expect).abs().max() < 1e-12 * expect.abs().max());
    }

    /// Moment-trace columns applied to the traces of a constant moment must
    /// match the smooth pairing, including corner terms.
    #[test]
    fn moment_columns_reproduce_constant_moments() {
        let el = PlateElement::new().unwrap();
        let map = some_map();
        let signs = [1.0, -1.0, 1.0];
        let b = el.local_b(&map, signs);
        struct Cubic;
        // w = x^2 y - 0.5 x y^2 + 0.25 y^2 has a linear Hessian; only
        // constant parts are used through a frozen point below
        impl SmoothField for Cubic {
            fn value(&self, _x: Point) -> f64 {
                0.0
            }
            fn grad(&self, _x: Point) -> [f64; 2] {
                [0.0; 2]
            }
            fn hessian(&self, _x: Point) -> [f64; 3] {
                [0.4, -0.3, 1.1]
            }
            fn third(&self, _x: Point) -> [f64; 4] {
                [0.0; 4]
            }
        }
        let state = SmoothPlateState { map: &map, field: &Cubic };
        struct TracesOnly<'a>(SmoothPlateState<'a>);
        impl PlateTrial for TracesOnly<'_> {
            fn normal_moment(&self, k: usize, s: f64, x: Point) -> f64 {
                self.0.normal_moment(k, s, x)
            }
            fn shear(&self, k: usize, s: f64, x: Point) -> f64 {
                self.0.shear(k, s, x)
            }
            fn twist(&self, k: usize, end: usize) -> f64 {
                self.0.twist(k, end)
            }
        }
        let expect = el.form(&map, &TracesOnly(state));
        let mut x = DVector::zeros(N_TRIAL);
        let state = SmoothPlateState { map: &map, field: &Cubic };
        for k in 0..3 {
            let mid = map.map(AffineMap::edge_ref_point(k, 0.5));
            x[13 + 4 * k] = state.normal_moment(k, 0.5, mid);
            x[14 + 4 * k] = signs[k] * state.shear(k, 0.5, mid);
            let (lo_end, hi_end) = if signs[k] > 0.0 { (0, 1) } else { (1, 0) };
            x[15 + 4 * k] = state.twist(k, lo_end);
            x[16 + 4 * k] = state.twist(k, hi_end);
        }
        let got = &b * &x;
        assert!((&got - &expect).abs().max() < 1e-12 * expect.abs().max().max(1.0));
        // for a constant moment the whole boundary pairing equals -(M, ∇∇v)
        let m = [-0.4, 0.3, -1.1];
        let mut vol = DVector::zeros(N_TRIAL);
        vol[1] = m[0];
        vol[2] = m[1];
        vol[3] = m[2];
        let bulk = &b * &vol;
        for i in 0..NV {
            assert!((got[i] + bulk[i]).abs() < 1e-12 * bulk.abs().max(), "test {i}");
        }
    }

    #[test]
    fn smooth_solution_is_consistent() {
        let el = fine_element();
        let u = Separable::new(Factor::SineSquared(PI), Factor::SineSquared(PI));
        let ex = ExactBundle::plate(u);
        let mesh = Mesh::rectangle(1.0, 1.0, 2).unwrap();
        for t in 0..mesh.num_triangles() {
            let map = map_affine(&mesh, t).unwrap();
            let b = el.form(&map, &SmoothPlateState { map: &map, field: &u });
            let l = el.load(&map, &|x| ex.f(x));
            let scale = l.abs().max().max(1.0);
            assert!((&b - &l).abs().max() < 1e-8 * scale, "t {t}: {}", (&b - &l).abs().max());
        }
    }

    #[test]
    fn dof_counts() {
        let sq = Mesh::rectangle(1.0, 1.0, 1).unwrap().classify_boundary(BcLayout::AllDirichlet).unwrap();
        // u 2, M 6, û 0, (m_nn, q_eff) 10, twists 10 - 4 gauges
        assert_eq!(dof_map_plate(&sq, PlateBc::Clamped).unwrap().num_free(), 24);
        assert_eq!(dof_map_plate_with(&sq, PlateBc::Clamped, false).unwrap().num_free(), 18);
        assert_eq!(dof_map_plate(&sq, PlateBc::SimplySupported).unwrap().num_free(), 20);
        assert_eq!(dof_map_plate_with(&sq, PlateBc::SimplySupported, false).unwrap().num_free(), 14);
        let fine = sq.refine_uniform();
        let m = dof_map_plate(&fine, PlateBc::Clamped).unwrap();
        let lay = PlateLayout::of(&fine);
        let free_traces = (0..lay.vertices)
            .flat_map(|v| (0..3).map(move |r| lay.trace(v, r)))
            .filter(|&i| !m.is_constrained(i))
            .count();
        assert_eq!(free_traces, 3);
    }

    #[test]
    fn free_boundary_twists() {
        let strip = Mesh::rectangle(3.0, 1.0, 1).unwrap().classify_boundary(BcLayout::LeftRightDirichlet).unwrap();
        let lay = PlateLayout::of(&strip);
        let m = dof_map_plate(&strip, PlateBc::MixedFree).unwrap();
        let edges = strip.edges();
        for (v, inc) in strip.vertex_edges().iter().enumerate() {
            let fixed: Vec<usize> =
                inc.iter().copied().filter(|&e| m.is_constrained(lay.twist(e, edges[e][1] == v))).collect();
            if strip.vertex_tag(v) == BoundaryTag::NeumannLike {
                assert_eq!(fixed.len(), 2);
                assert!(fixed.iter().all(|&e| strip.is_boundary_edge(e)));
            } else {
                assert_eq!(fixed, vec![*inc.iter().min().unwrap()]);
            }
        }
        for e in 0..lay.edges {
            let free_edge = strip.edge_tag(e) == BoundaryTag::NeumannLike;
            assert_eq!(m.is_constrained(lay.normal_moment(e)), free_edge);
            assert_eq!(m.is_constrained(lay.shear(e)), free_edge);
        }
    }
}
