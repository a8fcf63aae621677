use nalgebra::DMatrix;

use super::quadrature::quad_triangle;
use crate::error::{Error, Result};

pub const MAX_BASIS_DEGREE: usize = 4;

/// Centroid of the reference triangle; monomials are centred here.
pub const REF_CENTROID: [f64; 2] = [1.0 / 3.0, 1.0 / 3.0];

/// `P^p` on the reference triangle, orthonormal in the reference L2 product.
///
/// Basis function `i` is `sum_j coeffs[(i, j)] * m_j` with the centred
/// monomials `m_j = (xi - 1/3)^a_j (eta - 1/3)^b_j`, ordered by total degree.
#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    degree: usize,
    exponents: Vec<(i32, i32)>,
    coeffs: DMatrix<f64>,
}

/// Values, gradients and Hessians (`[xx, xy, yy]`) of a basis at a set of
/// points, indexed `[point][function]`.
#[derive(Clone, Debug)]
pub struct BasisTable {
    pub values: Vec<Vec<f64>>,
    pub grads: Vec<Vec<[f64; 2]>>,
    pub hessians: Vec<Vec<[f64; 3]>>,
}

pub fn dim_p(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Monomial `x^a y^b` and its first and second derivatives.
fn monomial_jet(a: i32, b: i32, x: f64, y: f64) -> (f64, [f64; 2], [f64; 3]) {
    let pw = |t: f64, k: i32| if k < 0 { 0.0 } else { t.powi(k) };
    let (af, bf) = (a as f64, b as f64);
    let v = pw(x, a) * pw(y, b);
    let gx = if a > 0 { af * pw(x, a - 1) * pw(y, b) } else { 0.0 };
    let gy = if b > 0 { bf * pw(x, a) * pw(y, b - 1) } else { 0.0 };
    let hxx = if a > 1 { af * (af - 1.0) * pw(x, a - 2) * pw(y, b) } else { 0.0 };
    let hxy = if a > 0 && b > 0 { af * bf * pw(x, a - 1) * pw(y, b - 1) } else { 0.0 };
    let hyy = if b > 1 { bf * (bf - 1.0) * pw(x, a) * pw(y, b - 2) } else { 0.0 };
    (v, [gx, gy], [hxx, hxy, hyy])
}

impl ReferenceBasis {
    pub fn new(p: usize) -> Result<Self> {
        if p > MAX_BASIS_DEGREE {
            return Err(Error::UnsupportedDegree { degree: p, max: MAX_BASIS_DEGREE });
        }
        let exponents: Vec<(i32, i32)> = (0..=p as i32)
            .flat_map(|total| (0..=total).rev().map(move |a| (a, total - a)))
            .collect();
        let n = exponents.len();
        let rule = quad_triangle(2 * p)?;
        let mono: Vec<Vec<f64>> = rule
            .points
            .iter()
            .map(|pt| {
                let (x, y) = (pt[0] - REF_CENTROID[0], pt[1] - REF_CENTROID[1]);
                exponents.iter().map(|&(a, b)| monomial_jet(a, b, x, y).0).collect()
            })
            .collect();
        let gram_of = |c: &DMatrix<f64>| {
            let mut g = DMatrix::zeros(n, n);
            for (vals, w) in mono.iter().zip(&rule.weights) {
                let phi = c * nalgebra::DVector::from_column_slice(vals);
                g += *w * &phi * phi.transpose();
            }
            g
        };
        // Cholesky-based Gram-Schmidt, applied twice for orthonormality to
        // round-off.
        let mut coeffs = DMatrix::<f64>::identity(n, n);
        for _ in 0..2 {
            let chol = gram_of(&coeffs).cholesky().expect("monomial Gram matrix is SPD");
            let linv = chol.l().try_inverse().expect("triangular factor is invertible");
            coeffs = linv * coeffs;
        }
        Ok(ReferenceBasis { degree: p, exponents, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    /// Exponents of the centred monomials the basis is expanded in.
    pub fn exponents(&self) -> &[(i32, i32)] {
        &self.exponents
    }

    /// Row `i` holds the monomial coefficients of basis function `i`.
    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    pub fn tabulate(&self, points: &[[f64; 2]]) -> BasisTable {
        let n = self.dim();
        let mut values = Vec::with_capacity(points.len());
        let mut grads = Vec::with_capacity(points.len());
        let mut hessians = Vec::with_capacity(points.len());
        for pt in points {
            let (x, y) = (pt[0] - REF_CENTROID[0], pt[1] - REF_CENTROID[1]);
            let jets: Vec<_> = self.exponents.iter().map(|&(a, b)| monomial_jet(a, b, x, y)).collect();
            let mut v = vec![0.0; n];
            let mut g = vec![[0.0; 2]; n];
            let mut h = vec![[0.0; 3]; n];
            for i in 0..n {
                for (j, (mv, mg, mh)) in jets.iter().enumerate() {
                    let c = self.coeffs[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    v[i] += c * mv;
                    g[i][0] += c * mg[0];
                    g[i][1] += c * mg[1];
                    for k in 0..3 {
                        h[i][k] += c * mh[k];
                    }
                }
            }
            values.push(v);
            grads.push(g);
            hessians.push(h);
        }
        BasisTable { values, grads, hessians }
    }
}

/// Convenience constructor matching the tabulated-basis contract.
pub fn basis_p(p: usize, points: &[[f64; 2]]) -> Result<(ReferenceBasis, BasisTable)> {
    let basis = ReferenceBasis::new(p)?;
    let table = basis.tabulate(points);
    Ok((basis, table))
}
