use crate::error::{Error, Result};

pub const MAX_TRIANGLE_DEGREE: usize = 10;
pub const MAX_EDGE_DEGREE: usize = 31;

/// Quadrature rule on a reference cell. Triangle points are reference
/// coordinates `(xi, eta)` on `{xi, eta >= 0, xi + eta <= 1}`; edge points are
/// parameters in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl<P> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&P, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials up to `degree`.
pub fn quad_edge(degree: usize) -> Result<QuadRule<f64>> {
    if degree > MAX_EDGE_DEGREE {
        return Err(Error::UnsupportedDegree { degree, max: MAX_EDGE_DEGREE });
    }
    let n = degree / 2 + 1;
    let (points, weights) = gauss_legendre(n);
    Ok(QuadRule { points, weights, exactness: 2 * n - 1 })
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle, exact for
/// total degree `degree`. All weights are positive and the points interior.
pub fn quad_triangle(degree: usize) -> Result<QuadRule<[f64; 2]>> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(Error::UnsupportedDegree { degree, max: MAX_TRIANGLE_DEGREE });
    }
    // (a, b) in the unit square -> (a (1 - b), b); Jacobian (1 - b) raises
    // the degree in b by one.
    let n = (degree + 3) / 2;
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&b, &wb) in x.iter().zip(&w) {
        for (&a, &wa) in x.iter().zip(&w) {
            points.push([a * (1.0 - b), b]);
            weights.push(wa * wb * (1.0 - b));
        }
    }
    Ok(QuadRule { points, weights, exactness: 2 * n - 2 })
}

/// Rule `quad_triangle(degree)` on each of the `n * n` congruent pieces of a
/// uniform subdivision of the reference triangle.
pub fn quad_triangle_composite(degree: usize, n: usize) -> Result<QuadRule<[f64; 2]>> {
    let base = quad_triangle(degree)?;
    let n = n.max(1);
    let h = 1.0 / n as f64;
    let mut points = Vec::with_capacity(base.len() * n * n);
    let mut weights = Vec::with_capacity(base.len() * n * n);
    for j in 0..n {
        for i in 0..n - j {
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            // upright piece
            for (p, w) in base.iter() {
                points.push([x0 + h * p[0], y0 + h * p[1]]);
                weights.push(w * h * h);
            }
            // inverted piece
            if i + j + 1 < n {
                for (p, w) in base.iter() {
                    points.push([x0 + h - h * p[0], y0 + h - h * p[1]]);
                    weights.push(w * h * h);
                }
            }
        }
    }
    Ok(QuadRule { points, weights, exactness: base.exactness })
}

/// Rule `quad_edge(degree)` on each of `n` equal pieces of `[0, 1]`.
pub fn quad_edge_composite(degree: usize, n: usize) -> Result<QuadRule<f64>> {
    let base = quad_edge(degree)?;
    let n = n.max(1);
    let h = 1.0 / n as f64;
    let mut points = Vec::with_capacity(base.len() * n);
    let mut weights = Vec::with_capacity(base.len() * n);
    for i in 0..n {
        for (p, w) in base.iter() {
            points.push(h * (i as f64 + p));
            weights.push(w * h);
        }
    }
    Ok(QuadRule { points, weights, exactness: base.exactness })
}
