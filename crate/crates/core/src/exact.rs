//! Manufactured solutions built from products of one-dimensional factors.

use std::f64::consts::FRAC_PI_2;

use crate::mesh::Point;

/// A smooth scalar field with derivatives up to third order.
///
/// Hessians are `[xx, xy, yy]`, third derivatives `[xxx, xxy, xyy, yyy]`.
pub trait SmoothField: Sync {
    fn value(&self, x: Point) -> f64;
    fn grad(&self, x: Point) -> [f64; 2];
    fn hessian(&self, x: Point) -> [f64; 3];
    fn third(&self, x: Point) -> [f64; 4];
}

/// One-dimensional factor of a separable field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    One,
    /// `sin(a t)`
    Sine(f64),
    /// `sin(a t)^2`
    SineSquared(f64),
}

impl Factor {
    /// `k`-th derivative at `t`.
    pub fn eval(&self, t: f64, k: u32) -> f64 {
        match *self {
            Factor::One => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Sine(a) => a.powi(k as i32) * (a * t + k as f64 * FRAC_PI_2).sin(),
            Factor::SineSquared(a) => {
                if k == 0 {
                    (a * t).sin().powi(2)
                } else {
                    // sin^2 = (1 - cos(2 a t)) / 2
                    -0.5 * (2.0 * a).powi(k as i32) * (2.0 * a * t + k as f64 * FRAC_PI_2).cos()
                }
            }
        }
    }
}

/// `u(x, y) = X(x) Y(y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separable {
    pub x: Factor,
    pub y: Factor,
}

impl Separable {
    pub fn new(x: Factor, y: Factor) -> Self {
        Separable { x, y }
    }

    /// `d^i/dx^i d^j/dy^j u`
    pub fn derivative(&self, p: Point, i: u32, j: u32) -> f64 {
        self.x.eval(p[0], i) * self.y.eval(p[1], j)
    }

    pub fn laplacian(&self, p: Point) -> f64 {
        self.derivative(p, 2, 0) + self.derivative(p, 0, 2)
    }

    pub fn bilaplacian(&self, p: Point) -> f64 {
        self.derivative(p, 4, 0) + 2.0 * self.derivative(p, 2, 2) + self.derivative(p, 0, 4)
    }
}

impl SmoothField for Separable {
    fn value(&self, p: Point) -> f64 {
        self.derivative(p, 0, 0)
    }
    fn grad(&self, p: Point) -> [f64; 2] {
        [self.derivative(p, 1, 0), self.derivative(p, 0, 1)]
    }
    fn hessian(&self, p: Point) -> [f64; 3] {
        [self.derivative(p, 2, 0), self.derivative(p, 1, 1), self.derivative(p, 0, 2)]
    }
    fn third(&self, p: Point) -> [f64; 4] {
        [self.derivative(p, 3, 0), self.derivative(p, 2, 1), self.derivative(p, 1, 2), self.derivative(p, 0, 3)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pde {
    /// `-Δu + γu = f`
    Poisson,
    /// `Δ²u = f`
    Plate,
}

/// Exact solution together with its data.
#[derive(Clone, Copy, Debug)]
pub struct ExactBundle {
    pub u: Separable,
    pub pde: Pde,
    pub gamma: f64,
}

impl ExactBundle {
    pub fn poisson(u: Separable, gamma: f64) -> Self {
        ExactBundle { u, pde: Pde::Poisson, gamma }
    }

    pub fn plate(u: Separable) -> Self {
        ExactBundle { u, pde: Pde::Plate, gamma: 0.0 }
    }

    pub fn value(&self, x: Point) -> f64 {
        self.u.value(x)
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        self.u.grad(x)
    }

    pub fn hessian(&self, x: Point) -> [f64; 3] {
        self.u.hessian(x)
    }

    /// `M = -∇∇u` as `[M11, M12, M22]`
    pub fn moment(&self, x: Point) -> [f64; 3] {
        self.u.hessian(x).map(|h| -h)
    }

    pub fn f(&self, x: Point) -> f64 {
        match self.pde {
            Pde::Poisson => -self.u.laplacian(x) + self.gamma * self.u.value(x),
            Pde::Plate => self.u.bilaplacian(x),
        }
    }
}
