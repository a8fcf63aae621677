//! Ultraweak Poisson formulation with lowest-order trial spaces.
//!
//! Trial unknowns per element: `u` (P0), `sigma` (P0^2), the trace `û` of a
//! continuous piecewise-linear function (vertex values) and the normal flux
//! `σ̂` (P0 per edge, signed by the global edge normal). Test space
//! `P2 x (P2)^2` on each element.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dofs::DofMap;
use crate::error::Result;
use crate::exact::SmoothField;
use crate::fem::{map_affine, quad_edge, quad_triangle, AffineMap, BasisTable, QuadRule, ReferenceBasis};
use crate::mesh::{BoundaryTag, Mesh, Point};
use crate::solver::{condense_local, CondensedLocal, LocalSystem};

pub const TEST_DEGREE: usize = 2;
/// `v` (6) and the two components of `tau` (6 each)
pub const N_TEST: usize = 18;
/// `u`, `sigma` (2), `û` at the 3 vertices, `σ̂` on the 3 edges
pub const N_TRIAL: usize = 9;
const NV: usize = 6;

const VOLUME_DEGREE: usize = 2 * TEST_DEGREE;
const EDGE_DEGREE: usize = 2 * TEST_DEGREE;
const LOAD_DEGREE: usize = 10;

/// A trial state restricted to one element. Edge quantities live on local
/// edge `k` at parameter `s` in `[0, 1]` (from vertex `k` to `k + 1`) with
/// physical point `x`.
pub trait PoissonTrial {
    fn u(&self, _x: Point) -> f64 {
        0.0
    }
    fn sigma(&self, _x: Point) -> [f64; 2] {
        [0.0; 2]
    }
    fn trace(&self, _k: usize, _s: f64, _x: Point) -> f64 {
        0.0
    }
    /// `σ̂ · n_T` with the outward normal of this element
    fn flux(&self, _k: usize, _s: f64, _x: Point) -> f64 {
        0.0
    }
}

/// Traces of a smooth solution `u` with `σ = ∇u` on one element.
pub struct SmoothPoissonState<'a> {
    pub map: &'a AffineMap,
    pub field: &'a dyn SmoothField,
}

impl PoissonTrial for SmoothPoissonState<'_> {
    fn u(&self, x: Point) -> f64 {
        self.field.value(x)
    }
    fn sigma(&self, x: Point) -> [f64; 2] {
        self.field.grad(x)
    }
    fn trace(&self, _k: usize, _s: f64, x: Point) -> f64 {
        self.field.value(x)
    }
    fn flux(&self, k: usize, _s: f64, x: Point) -> f64 {
        let g = self.field.grad(x);
        let n = self.map.edges[k].normal;
        g[0] * n[0] + g[1] * n[1]
    }
}

/// Basis function `index` of the local trial space.
struct Column {
    index: usize,
    signs: [f64; 3],
}

impl PoissonTrial for Column {
    fn u(&self, _x: Point) -> f64 {
        if self.index == 0 {
            1.0
        } else {
            0.0
        }
    }
    fn sigma(&self, _x: Point) -> [f64; 2] {
        match self.index {
            1 => [1.0, 0.0],
            2 => [0.0, 1.0],
            _ => [0.0, 0.0],
        }
    }
    fn trace(&self, k: usize, s: f64, _x: Point) -> f64 {
        match self.index.checked_sub(3) {
            Some(i) if i == k => 1.0 - s,
            Some(i) if i == (k + 1) % 3 => s,
            _ => 0.0,
        }
    }
    fn flux(&self, k: usize, _s: f64, _x: Point) -> f64 {
        if self.index == 6 + k {
            self.signs[k]
        } else {
            0.0
        }
    }
}

/// The four constituents of the scaled Gram matrix,
/// `G_d = d^-2 m_v + k_v + m_tau + d^2 k_div`.
#[derive(Clone, Debug)]
pub struct GramParts {
    pub m_v: DMatrix<f64>,
    pub k_v: DMatrix<f64>,
    pub m_tau: DMatrix<f64>,
    pub k_div: DMatrix<f64>,
}

impl GramParts {
    pub fn combine(&self, d: f64) -> DMatrix<f64> {
        &self.m_v / (d * d) + &self.k_v + &self.m_tau + &self.k_div * (d * d)
    }
}

/// Reference tables shared by all elements.
pub struct PoissonElement {
    vol: QuadRule<[f64; 2]>,
    vol_tab: BasisTable,
    edge: QuadRule<f64>,
    edge_tab: Vec<BasisTable>,
    load: QuadRule<[f64; 2]>,
    load_tab: BasisTable,
}

impl PoissonElement {
    pub fn new() -> Result<Self> {
        Self::with_rules(quad_triangle(VOLUME_DEGREE)?, quad_edge(EDGE_DEGREE)?, quad_triangle(LOAD_DEGREE)?)
    }

    /// Tables on custom rules, e.g. fine composite rules to integrate
    /// non-polynomial trial states accurately.
    pub fn with_rules(vol: QuadRule<[f64; 2]>, edge: QuadRule<f64>, load: QuadRule<[f64; 2]>) -> Result<Self> {
        let basis = ReferenceBasis::new(TEST_DEGREE)?;
        let edge_tab = (0..3)
            .map(|k| {
                let pts: Vec<[f64; 2]> = edge.points.iter().map(|&s| AffineMap::edge_ref_point(k, s)).collect();
                basis.tabulate(&pts)
            })
            .collect();
        Ok(PoissonElement {
            vol_tab: basis.tabulate(&vol.points),
            load_tab: basis.tabulate(&load.points),
            vol,
            edge,
            edge_tab,
            load,
        })
    }

    /// Shared default tables.
    pub fn shared() -> &'static PoissonElement {
        static SHARED: OnceLock<PoissonElement> = OnceLock::new();
        SHARED.get_or_init(|| PoissonElement::new().expect("default degrees are supported"))
    }

    pub fn gram_parts(&self, map: &AffineMap) -> GramParts {
        let mut m_v = DMatrix::zeros(N_TEST, N_TEST);
        let mut k_v = DMatrix::zeros(N_TEST, N_TEST);
        let mut m_tau = DMatrix::zeros(N_TEST, N_TEST);
        let mut k_div = DMatrix::zeros(N_TEST, N_TEST);
        for (q, &w) in self.vol.weights.iter().enumerate() {
            let w = w * map.det;
            let phi = &self.vol_tab.values[q];
            let grad: Vec<[f64; 2]> = self.vol_tab.grads[q].iter().map(|&g| map.push_grad(g)).collect();
            // div of (phi_i, 0) and (0, phi_i)
            let div: Vec<f64> = grad.iter().map(|g| g[0]).chain(grad.iter().map(|g| g[1])).collect();
            for i in 0..NV {
                for j in 0..NV {
                    let mass = w * phi[i] * phi[j];
                    m_v[(i, j)] += mass;
                    k_v[(i, j)] += w * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
                    m_tau[(NV + i, NV + j)] += mass;
                    m_tau[(2 * NV + i, 2 * NV + j)] += mass;
                }
            }
            for i in 0..2 * NV {
                for j in 0..2 * NV {
                    k_div[(NV + i, NV + j)] += w * div[i] * div[j];
                }
            }
        }
        GramParts { m_v, k_v, m_tau, k_div }
    }

    pub fn gram(&self, map: &AffineMap, d: f64) -> DMatrix<f64> {
        self.gram_parts(map).combine(d)
    }

    /// `b(state, e_j)` for every test basis function `e_j`.
    pub fn form(&self, map: &AffineMap, gamma: f64, state: &dyn PoissonTrial) -> DVector<f64> {
        let mut out = DVector::zeros(N_TEST);
        for (q, (xi, w)) in self.vol.iter().enumerate() {
            let x = map.map(*xi);
            let w = w * map.det;
            let u = state.u(x);
            let sigma = state.sigma(x);
            for i in 0..NV {
                let phi = self.vol_tab.values[q][i];
                let g = map.push_grad(self.vol_tab.grads[q][i]);
                // (u, div tau + gamma v) + (sigma, tau + grad v)
                out[i] += w * (gamma * u * phi + sigma[0] * g[0] + sigma[1] * g[1]);
                out[NV + i] += w * (u * g[0] + sigma[0] * phi);
                out[2 * NV + i] += w * (u * g[1] + sigma[1] * phi);
            }
        }
        for (k, edge) in map.edges.iter().enumerate() {
            for (q, (&s, w)) in self.edge.iter().enumerate() {
                let x = map.map(AffineMap::edge_ref_point(k, s));
                let w = w * edge.length;
                let uh = state.trace(k, s, x);
                let flux = state.flux(k, s, x);
                for i in 0..NV {
                    let phi = self.edge_tab[k].values[q][i];
                    out[i] -= w * flux * phi;
                    out[NV + i] -= w * uh * phi * edge.normal[0];
                    out[2 * NV + i] -= w * uh * phi * edge.normal[1];
                }
            }
        }
        out
    }

    /// Columns ordered `u, sigma_x, sigma_y, û_0..2, σ̂_0..2`; `signs` are the
    /// orientation signs of the element's edges.
    pub fn local_b(&self, map: &AffineMap, signs: [f64; 3], gamma: f64) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(N_TEST, N_TRIAL);
        for index in 0..N_TRIAL {
            b.set_column(index, &self.form(map, gamma, &Column { index, signs }));
        }
        b
    }

    /// `scale * (f, v)` for the `v` tests; the `tau` block is zero.
    pub fn load(&self, map: &AffineMap, f: &dyn Fn(Point) -> f64, scale: f64) -> DVector<f64> {
        let mut l = DVector::zeros(N_TEST);
        for (q, (xi, w)) in self.load.iter().enumerate() {
            let fx = scale * w * map.det * f(map.map(*xi));
            for i in 0..NV {
                l[i] += fx * self.load_tab.values[q][i];
            }
        }
        l
    }
}

pub fn local_gram_poisson(map: &AffineMap, d: f64) -> DMatrix<f64> {
    PoissonElement::shared().gram(map, d)
}

pub fn local_b_poisson(map: &AffineMap, signs: [f64; 3], gamma: f64) -> DMatrix<f64> {
    PoissonElement::shared().local_b(map, signs, gamma)
}

pub fn local_load_poisson(map: &AffineMap, f: &dyn Fn(Point) -> f64, scale: f64) -> DVector<f64> {
    PoissonElement::shared().load(map, f, scale)
}

pub fn element_signs(mesh: &Mesh, t: usize) -> [f64; 3] {
    let te = mesh.tri_edges(t);
    [te[0].sign, te[1].sign, te[2].sign]
}

pub fn local_system(mesh: &Mesh, t: usize, d: f64, gamma: f64, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<LocalSystem> {
    let el = PoissonElement::shared();
    let map = map_affine(mesh, t)?;
    LocalSystem::new(el.gram(&map, d), el.local_b(&map, element_signs(mesh, t), gamma), el.load(&map, f, 1.0))
}

/// Local systems of all elements, condensed in parallel.
pub fn condensed_systems(mesh: &Mesh, d: f64, gamma: f64, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<CondensedLocal>> {
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| condense_local(&local_system(mesh, t, d, gamma, f)?, t, d))
        .collect()
}

/// Raw unknown numbering: fields by triangle, then vertex traces, then edge
/// fluxes.
#[derive(Clone, Copy, Debug)]
pub struct PoissonLayout {
    pub triangles: usize,
    pub vertices: usize,
    pub edges: usize,
}

impl PoissonLayout {
    pub fn of(mesh: &Mesh) -> Self {
        PoissonLayout { triangles: mesh.num_triangles(), vertices: mesh.num_vertices(), edges: mesh.num_edges() }
    }

    pub fn num_raw(&self) -> usize {
        3 * self.triangles + self.vertices + self.edges
    }

    pub fn u(&self, t: usize) -> usize {
        3 * t
    }

    pub fn sigma(&self, t: usize, c: usize) -> usize {
        3 * t + 1 + c
    }

    pub fn trace(&self, v: usize) -> usize {
        3 * self.triangles + v
    }

    pub fn flux(&self, e: usize) -> usize {
        3 * self.triangles + self.vertices + e
    }
}

/// `û = 0` at Dirichlet vertices, `σ̂ = 0` on Neumann edges.
pub fn dof_map_poisson(mesh: &Mesh) -> Result<DofMap> {
    let lay = PoissonLayout::of(mesh);
    let mut elems = Vec::with_capacity(N_TRIAL * lay.triangles);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        elems.extend([lay.u(t), lay.sigma(t, 0), lay.sigma(t, 1)]);
        elems.extend(tri.iter().map(|&v| lay.trace(v)));
        elems.extend(mesh.tri_edges(t).iter().map(|te| lay.flux(te.edge)));
    }
    let mut constrained = vec![false; lay.num_raw()];
    for v in 0..lay.vertices {
        if mesh.vertex_tag(v) == BoundaryTag::DirichletLike {
            constrained[lay.trace(v)] = true;
        }
    }
    for e in 0..lay.edges {
        if mesh.edge_tag(e) == BoundaryTag::NeumannLike {
            constrained[lay.flux(e)] = true;
        }
    }
    DofMap::new(lay.num_raw(), N_TRIAL, elems, &constrained)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::basis::REF_CENTROID;
    use crate::fem::{quad_edge_composite, quad_triangle_composite};
    use crate::mesh::BcLayout;
    use std::f64::consts::PI;

    fn some_map() -> AffineMap {
        AffineMap::from_points([[0.2, 0.1], [1.3, 0.4], [0.5, 1.2]]).unwrap()
    }

    #[test]
    fn gram_is_literal_sum_of_parts() {
        let el = PoissonElement::new().unwrap();
        let map = some_map();
        let p = el.gram_parts(&map);
        for d in [1.0, 0.1, 10.0, 100.0] {
            let g = el.gram(&map, d);
            let lit = &p.m_v * (1.0 / (d * d)) + &p.k_v + &p.m_tau + &p.k_div * (d * d);
            assert!((&g - &lit).abs().max() <= 1e-14 * g.abs().max());
            assert!((&g - g.transpose()).abs().max() <= 1e-12 * g.abs().max());
            assert!(g.clone().cholesky().is_some());
        }
        // the v and tau blocks do not couple
        let g = el.gram(&map, 3.0);
        assert_eq!(g.view((0, NV), (NV, 2 * NV)).abs().max(), 0.0);
    }

    #[test]
    fn constant_test_entry() {
        let el = PoissonElement::new().unwrap();
        let map = some_map();
        let phi0 = 2f64.sqrt();
        for d in [1.0, 4.0] {
            let g = el.gram(&map, d);
            assert!((g[(0, 0)] / (phi0 * phi0) - map.area() / (d * d)).abs() < 1e-14);
        }
    }

    /// Gram matrix assembled from physical monomials with hand-written
    /// derivatives, then mapped to the element basis by interpolation.
    #[test]
    fn gram_matches_monomial_oracle() {
        let el = PoissonElement::new().unwrap();
        let map = some_map();
        let c = map.map(REF_CENTROID);
        let exps: Vec<(i32, i32)> = (0..=2).flat_map(|t| (0..=t).map(move |a| (a, t - a))).collect();
        let mono = |a: i32, b: i32, x: Point| {
            let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
            let p = |t: f64, k: i32| if k < 0 { 0.0 } else { t.powi(k) };
            (p(dx, a) * p(dy, b), [a as f64 * p(dx, a - 1) * p(dy, b), b as f64 * p(dx, a) * p(dy, b - 1)])
        };
        // change of basis: phi_i = sum_j t[(i, j)] m_j
        let basis = ReferenceBasis::new(2).unwrap();
        let ref_pts = [[0.1, 0.1], [0.7, 0.1], [0.1, 0.7], [0.4, 0.2], [0.3, 0.5], [0.2, 0.3]];
        let tab = basis.tabulate(&ref_pts);
        let vm = DMatrix::from_fn(6, 6, |p, j| mono(exps[j].0, exps[j].1, map.map(ref_pts[p])).0);
        let vphi = DMatrix::from_fn(6, 6, |p, i| tab.values[p][i]);
        let t = vm.lu().solve(&vphi).unwrap().transpose();

        let q = quad_triangle(10).unwrap();
        let (mut mm, mut kk) = (DMatrix::zeros(6, 6), DMatrix::zeros(6, 6));
        let mut dxx = DMatrix::zeros(12, 12);
        for (xi, w) in q.iter() {
            let x = map.map(*xi);
            let w = w * map.det;
            let vals: Vec<_> = exps.iter().map(|&(a, b)| mono(a, b, x)).collect();
            for i in 0..6 {
                for j in 0..6 {
                    mm[(i, j)] += w * vals[i].0 * vals[j].0;
                    kk[(i, j)] += w * (vals[i].1[0] * vals[j].1[0] + vals[i].1[1] * vals[j].1[1]);
                }
            }
            let div: Vec<f64> = vals.iter().map(|v| v.1[0]).chain(vals.iter().map(|v| v.1[1])).collect();
            for i in 0..12 {
                for j in 0..12 {
                    dxx[(i, j)] += w * div[i] * div[j];
                }
            }
        }
        let d = 7.0;
        let mut oracle = DMatrix::zeros(18, 18);
        let mv = &t * &mm * t.transpose();
        let kv = &t * &kk * t.transpose();
        let mut t2 = DMatrix::zeros(12, 12);
        t2.view_mut((0, 0), (6, 6)).copy_from(&t);
        t2.view_mut((6, 6), (6, 6)).copy_from(&t);
        let kd = &t2 * &dxx * t2.transpose();
        oracle.view_mut((0, 0), (6, 6)).copy_from(&(mv.clone() / (d * d) + kv));
        oracle.view_mut((6, 6), (6, 6)).copy_from(&mv);
        oracle.view_mut((12, 12), (6, 6)).copy_from(&mv);
        let tau = oracle.view((6, 6), (12, 12)).clone_owned() + kd * (d * d);
        oracle.view_mut((6, 6), (12, 12)).copy_from(&tau);
        let g = el.gram(&map, d);
        assert!((&g - &oracle).abs().max() <= 1e-12 * oracle.abs().max(), "{}", (&g - &oracle).abs().max());
    }

    #[test]
    fn known_b_entries() {
        let el = PoissonElement::new().unwrap();
        let map = some_map();
        let signs = [1.0, -1.0, 1.0];
        let b = el.local_b(&map, signs, 0.0);
        let phi0 = 2f64.sqrt();
        // sigma-hat on edge k against v = 1
        for k in 0..3 {
            assert!((b[(0, 6 + k)] / phi0 + signs[k] * map.edges[k].length).abs() < 1e-14);
        }
        // u against tau = (phi_i, 0): integral of d_x phi_i, equal to the
        // boundary integral of phi_i n_x
        let q = quad_edge(6).unwrap();
        let basis = ReferenceBasis::new(2).unwrap();
        for i in 0..NV {
            let mut bnd = 0.0;
            for (k, e) in map.edges.iter().enumerate() {
                for (&s, w) in q.iter() {
                    let tab = basis.tabulate(&[AffineMap::edge_ref_point(k, s)]);
                    bnd += w * e.length * tab.values[0][i] * e.normal[0];
                }
            }
            assert!((b[(NV + i, 0)] - bnd).abs() < 1e-13);
        }
        // u against tau = (x, 0): div tau = 1 gives |T|
        let tab = basis.tabulate(&[[0.1, 0.2], [0.6, 0.1], [0.2, 0.7], [0.3, 0.3], [0.5, 0.4], [0.15, 0.45]]);
        let pts = [[0.1, 0.2], [0.6, 0.1], [0.2, 0.7], [0.3, 0.3], [0.5, 0.4], [0.15, 0.45]];
        let vphi = DMatrix::from_fn(6, 6, |p, i| tab.values[p][i]);
        let xs = DVector::from_fn(6, |p, _| map.map(pts[p])[0]);
        let coef = vphi.lu().solve(&xs).unwrap();
        let entry: f64 = (0..NV).map(|i| coef[i] * b[(NV + i, 0)]).sum();
        assert!((entry - map.area()).abs() < 1e-13);
        // gamma enters only through the u column
        let bg = el.local_b(&map, signs, 2.5);
        let diff = &bg - &b;
        assert!(diff.columns(1, N_TRIAL - 1).abs().max() == 0.0);
        assert!((diff[(0, 0)] - 2.5 * phi0 * map.area()).abs() < 1e-13);
    }

    #[test]
    fn zero_trace_data_give_zero_columns() {
        let el = PoissonElement::new().unwrap();
        struct Nothing;
        impl PoissonTrial for Nothing {}
        assert_eq!(el.form(&some_map(), 1.0, &Nothing).norm(), 0.0);
    }

    #[test]
    fn load_values() {
        let el = PoissonElement::new().unwrap();
        let map = some_map();
        let phi0 = 2f64.sqrt();
        let l = el.load(&map, &|_| 1.0, 1.0);
        assert!((l[0] / phi0 - map.area()).abs() < 1e-14);
        assert_eq!(l.rows(NV, 2 * NV).abs().max(), 0.0);
        assert_eq!(el.load(&map, &|_| 0.0, 1.0).norm(), 0.0);
        assert!((el.load(&map, &|_| 1.0, -1.0)[0] + l[0]).abs() < 1e-15);
        // sin(pi x) on the unit right triangle against v = 1: the integral of
        // sin(pi x)(1 - x) over [0, 1] is 1/pi
        let unit = AffineMap::from_points([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let l = el.load(&unit, &|x| (PI * x[0]).sin(), 1.0);
        assert!((l[0] / phi0 - 1.0 / PI).abs() < 1e-10, "{}", (l[0] / phi0 - 1.0 / PI).abs());
    }

    struct Smooth {
        gamma: f64,
    }

    struct Field;

    impl SmoothField for Field {
        fn value(&self, x: Point) -> f64 {
            Smooth::w(x)
        }
        fn grad(&self, x: Point) -> [f64; 2] {
            Smooth::grad(x)
        }
        fn hessian(&self, _x: Point) -> [f64; 3] {
            unreachable!()
        }
        fn third(&self, _x: Point) -> [f64; 4] {
            unreachable!()
        }
    }

    impl Smooth {
        fn w(x: Point) -> f64 {
            (PI * x[0]).sin() * (PI * x[1]).sin()
        }
        fn grad(x: Point) -> [f64; 2] {
            [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos()]
        }
        fn f(&self, x: Point) -> f64 {
            (2.0 * PI * PI + self.gamma) * Self::w(x)
        }
    }

    #[test]
    fn exact_solution_is_consistent() {
        let el = PoissonElement::with_rules(
            quad_triangle_composite(10, 4).unwrap(),
            quad_edge_composite(15, 4).unwrap(),
            quad_triangle_composite(10, 4).unwrap(),
        )
        .unwrap();
        let mesh = Mesh::rectangle(1.0, 1.0, 2).unwrap();
        for gamma in [0.0, 1.0] {
            let ex = Smooth { gamma };
            for t in 0..mesh.num_triangles() {
                let map = map_affine(&mesh, t).unwrap();
                let b = el.form(&map, gamma, &SmoothPoissonState { map: &map, field: &Field });
                let l = el.load(&map, &|x| ex.f(x), 1.0);
                let scale = l.abs().max().max(1.0);
                assert!((&b - &l).abs().max() < 1e-8 * scale, "t {t}: {}", (&b - &l).abs().max());
            }
        }
    }

    #[test]
    fn dof_counts() {
        let sq = Mesh::rectangle(1.0, 1.0, 1).unwrap();
        let m = dof_map_poisson(&sq.classify_boundary(BcLayout::AllDirichlet).unwrap()).unwrap();
        assert_eq!(m.num_free(), 11);
        let m = dof_map_poisson(&sq.classify_boundary(BcLayout::LeftRightDirichlet).unwrap()).unwrap();
        assert_eq!(m.num_free(), 9);
        let fine = sq.refine_uniform().classify_boundary(BcLayout::AllDirichlet).unwrap();
        let m = dof_map_poisson(&fine).unwrap();
        assert_eq!(m.num_free(), 41);
        let lay = PoissonLayout::of(&fine);
        assert_eq!(m.num_raw(), lay.num_raw());
        // the centre vertex carries the only free trace
        let free_traces: Vec<usize> = (0..lay.vertices).filter(|&v| !m.is_constrained(lay.trace(v))).collect();
        assert_eq!(free_traces.len(), 1);
        assert_eq!(fine.vertices()[free_traces[0]], [0.5, 0.5]);
    }
}
