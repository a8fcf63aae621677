use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dofs::DofMap;
use crate::error::{Error, Result};

/// Element Gram matrix `G`, trial-to-test matrix `B` and load `l`.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub l: DVector<f64>,
}

impl LocalSystem {
    pub fn new(g: DMatrix<f64>, b: DMatrix<f64>, l: DVector<f64>) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n || b.nrows() != n || l.len() != n {
            return Err(Error::Shape(format!(
                "G {}x{}, B {}x{}, l {}",
                g.nrows(),
                g.ncols(),
                b.nrows(),
                b.ncols(),
                l.len()
            )));
        }
        Ok(LocalSystem { g, b, l })
    }
}

/// Element contribution to the normal equations in whitened form.
///
/// With `G = L L^T` we keep `W = L^{-1} B` and `z = L^{-1} l`. Then
/// `S = B^T G^{-1} B = W^T W`, `g = B^T G^{-1} l = W^T z`, and the element
/// residual in the dual test norm is `|z - W x|`.
#[derive(Clone, Debug)]
pub struct CondensedLocal {
    w: DMatrix<f64>,
    z: DVector<f64>,
}

impl CondensedLocal {
    pub fn n_trial(&self) -> usize {
        self.w.ncols()
    }

    pub fn whitened_b(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn whitened_l(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn s(&self) -> DMatrix<f64> {
        self.w.tr_mul(&self.w)
    }

    pub fn g(&self) -> DVector<f64> {
        self.w.tr_mul(&self.z)
    }

    /// `r^T G^{-1} r` with `r = l - B x`.
    pub fn residual_sq(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.w.nrows() {
            let mut r = self.z[i];
            for (j, xj) in x.iter().enumerate() {
                r -= self.w[(i, j)] * xj;
            }
            sum += r * r;
        }
        sum
    }
}

/// `element` and `d` only label the error when `G` is not positive definite.
pub fn condense_local(ls: &LocalSystem, element: usize, d: f64) -> Result<CondensedLocal> {
    let chol = ls.g.clone().cholesky().ok_or(Error::GramNotSpd { element, d })?;
    let l = chol.l();
    let w = l.solve_lower_triangular(&ls.b).ok_or(Error::GramNotSpd { element, d })?;
    let z = l.solve_lower_triangular(&ls.l).ok_or(Error::GramNotSpd { element, d })?;
    Ok(CondensedLocal { w, z })
}

/// Symmetric global matrix over the free unknowns (lower triangle, CSC).
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    rhs: Vec<f64>,
}

impl GlobalSystem {
    pub fn from_dense(a: &DMatrix<f64>, rhs: &[f64]) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || rhs.len() != n {
            return Err(Error::Shape(format!("{}x{} matrix with rhs {}", a.nrows(), a.ncols(), rhs.len())));
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            for i in j..n {
                if a[(i, j)] != 0.0 || i == j {
                    row_idx.push(i);
                    values.push(a[(i, j)]);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Ok(GlobalSystem { n, col_ptr, row_idx, values, rhs: rhs.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let rows = &self.row_idx[self.col_ptr[c]..self.col_ptr[c + 1]];
        match rows.binary_search(&r) {
            Ok(k) => self.values[self.col_ptr[c] + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                a[(i, j)] = self.values[k];
                a[(j, i)] = self.values[k];
            }
        }
        a
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = self.values[k];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// `b - A x` with error-free products and compensated sums, accurate to
    /// about one rounding of the result even when `|A||x|` is much larger.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut acc: Vec<(f64, f64)> = self.rhs.iter().map(|&b| (b, 0.0)).collect();
        let mut add = |i: usize, p: f64| {
            // subtract p exactly as a product, then compensated sum
            let (s, c) = acc[i];
            let t = s - p;
            let bp = t - s;
            let err = (s - (t - bp)) - (p + bp);
            acc[i] = (t, c + err);
        };
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = self.values[k];
                let p = v * x[j];
                add(i, p);
                add(i, v.mul_add(x[j], -p));
                if i != j {
                    let q = v * x[i];
                    add(j, q);
                    add(j, v.mul_add(x[i], -q));
                }
            }
        }
        acc.into_iter().map(|(s, c)| s + c).collect()
    }

    /// `|A| |x|` entrywise.
    pub fn abs_matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let v = self.values[k].abs();
                y[i] += v * x[j].abs();
                if i != j {
                    y[j] += v * x[i].abs();
                }
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| {
                let start = self.col_ptr[j];
                if start < self.col_ptr[j + 1] && self.row_idx[start] == j {
                    self.values[start]
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Sums the element matrices `S_T` and vectors `g_T` over the free unknowns,
/// in element order.
pub fn assemble_global(dofs: &DofMap, locals: &[CondensedLocal]) -> Result<GlobalSystem> {
    if locals.len() != dofs.num_elements() {
        return Err(Error::Shape(format!("{} local systems for {} elements", locals.len(), dofs.num_elements())));
    }
    if let Some(bad) = locals.iter().find(|c| c.n_trial() != dofs.local_dim()) {
        return Err(Error::Shape(format!("local system with {} trial functions, expected {}", bad.n_trial(), dofs.local_dim())));
    }
    let n = dofs.num_free();
    let frees = |t: usize| -> Vec<(usize, usize)> {
        dofs.element_free(t).enumerate().filter_map(|(a, f)| f.map(|i| (a, i))).collect()
    };

    let mut pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in 0..locals.len() {
        let f = frees(t);
        for &(_, i) in &f {
            for &(_, j) in &f {
                if i >= j {
                    pattern[j].push(i);
                }
            }
        }
    }
    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    let mut row_idx = Vec::new();
    for (j, col) in pattern.iter_mut().enumerate() {
        col.push(j);
        col.sort_unstable();
        col.dedup();
        row_idx.extend_from_slice(col);
        col_ptr.push(row_idx.len());
        *col = Vec::new();
    }
    let mut values = vec![0.0; row_idx.len()];
    let mut rhs = vec![0.0; n];

    for (t, local) in locals.iter().enumerate() {
        let s = local.s();
        let g = local.g();
        let f = frees(t);
        for &(a, i) in &f {
            rhs[i] += g[a];
            for &(b, j) in &f {
                if i >= j {
                    let rows = &row_idx[col_ptr[j]..col_ptr[j + 1]];
                    let k = rows.binary_search(&i).expect("entry is in the pattern");
                    values[col_ptr[j] + k] += s[(a, b)];
                }
            }
        }
    }
    Ok(GlobalSystem { n, col_ptr, row_idx, values, rhs })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SolveMethod {
    /// sparse Cholesky
    #[default]
    Direct,
    /// conjugate gradients with diagonal preconditioning
    Pcg,
}

pub const RESIDUAL_TOL: f64 = 1e-10;
/// Accepted componentwise backward error when the relative residual is
/// limited by rounding `x` itself (`eps |A||x| > RESIDUAL_TOL |b|`).
pub const BACKWARD_TOL: f64 = 1e-12;
const PCG_TOL: f64 = 1e-12;

pub fn solve_spd(gs: &GlobalSystem) -> Result<Vec<f64>> {
    solve_spd_with(gs, SolveMethod::default())
}

pub fn solve_spd_with(gs: &GlobalSystem, method: SolveMethod) -> Result<Vec<f64>> {
    solve_spd_tol(gs, method, RESIDUAL_TOL)
}

/// Fails with `InaccurateSolve` if the relative residual exceeds `tol` and
/// the componentwise backward error exceeds `BACKWARD_TOL`.
pub fn solve_spd_tol(gs: &GlobalSystem, method: SolveMethod, tol: f64) -> Result<Vec<f64>> {
    let bnorm = norm(&gs.rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; gs.n]);
    }
    let x = match method {
        SolveMethod::Direct => solve_direct(gs)?,
        SolveMethod::Pcg => solve_pcg(gs)?,
    };
    let rel = relative_residual(gs, &x);
    if !(rel <= tol || backward_error(gs, &x) <= BACKWARD_TOL) {
        return Err(Error::InaccurateSolve(rel));
    }
    Ok(x)
}

/// `‖b - A x‖ / ‖b‖`, with the residual evaluated in compensated arithmetic.
pub fn relative_residual(gs: &GlobalSystem, x: &[f64]) -> f64 {
    norm(&gs.residual(x)) / norm(&gs.rhs)
}

/// Componentwise backward error `max_i |b - A x|_i / (|A||x| + |b|)_i`.
pub fn backward_error(gs: &GlobalSystem, x: &[f64]) -> f64 {
    let r = gs.residual(x);
    let ax = gs.abs_matvec(x);
    r.iter()
        .zip(ax.iter().zip(&gs.rhs))
        .map(|(r, (a, b))| {
            let den = a + b.abs();
            if den == 0.0 {
                if *r == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                r.abs() / den
            }
        })
        .fold(0.0, f64::max)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_direct(gs: &GlobalSystem) -> Result<Vec<f64>> {
    let n = gs.n;
    // symmetric diagonal equilibration: factor D A D with D = diag(a_ii)^{-1/2}
    let diag = gs.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd);
    }
    let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut triplets = Vec::with_capacity(gs.values.len());
    for j in 0..n {
        for k in gs.col_ptr[j]..gs.col_ptr[j + 1] {
            let i = gs.row_idx[k];
            triplets.push(Triplet::new(i, j, scale[i] * gs.values[k] * scale[j]));
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Shape(format!("sparse matrix: {e:?}")))?;
    drop(triplets);
    let llt = a.sp_cholesky(Side::Lower).map_err(|_| Error::NotSpd)?;
    let solve = |b: &[f64]| -> Vec<f64> {
        let rhs = Mat::from_fn(n, 1, |i, _| scale[i] * b[i]);
        let y = llt.solve(&rhs);
        (0..n).map(|i| scale[i] * y[(i, 0)]).collect()
    };
    let bnorm = norm(&gs.rhs);
    let mut x = solve(&gs.rhs);
    // iterative refinement with accurately computed residuals
    for _ in 0..5 {
        let r = gs.residual(&x);
        if norm(&r) <= 1e-14 * bnorm {
            break;
        }
        let dx = solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotSpd);
    }
    Ok(x)
}

fn solve_pcg(gs: &GlobalSystem) -> Result<Vec<f64>> {
    let n = gs.n;
    let diag = gs.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::NotSpd);
    }
    let bnorm = norm(&gs.rhs);
    let mut x = vec![0.0; n];
    let mut r = gs.rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let cap = 10 * n.max(1);
    for _ in 0..cap {
        let ap = gs.matvec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotSpd);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= PCG_TOL * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence(cap))
}

/// Element residuals `eta_T` in the dual test norm and their l2 sum `eta`.
pub fn energy_residual(dofs: &DofMap, locals: &[CondensedLocal], x: &[f64]) -> Result<(Vec<f64>, f64)> {
    if locals.len() != dofs.num_elements() {
        return Err(Error::Shape(format!("{} local systems for {} elements", locals.len(), dofs.num_elements())));
    }
    if x.len() != dofs.num_free() {
        return Err(Error::Shape(format!("{} values for {} free unknowns", x.len(), dofs.num_free())));
    }
    let eta: Vec<f64> = locals
        .par_iter()
        .enumerate()
        .map(|(t, c)| c.residual_sq(&dofs.gather(t, x)).sqrt())
        .collect();
    let total = eta.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok((eta, total))
}

/// Condenses all local systems in parallel, keeping element order.
pub fn condense_all(locals: Vec<LocalSystem>, d: f64) -> Result<Vec<CondensedLocal>> {
    locals.into_par_iter().enumerate().map(|(t, ls)| condense_local(&ls, t, d)).collect()
}
