//! Gauss–Legendre quadrature on `(0, rho)` and `(0, rho)^2` after the
//! substitution `x = rho sin^2(theta)`, which turns square-root behaviour at
//! both ends of the interval into smooth integrands.

use std::f64::consts::FRAC_PI_2;
use std::num::NonZeroUsize;
use std::ops::{AddAssign, Mul};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
const START_NODES: usize = 32;
const MAX_NODES_1D: usize = 1 << 16;
const MAX_NODES_2D: usize = 2048;

/// Values that can be integrated: reals and complex numbers.
pub trait Integrand: Copy + Default + Send + Sync + AddAssign + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature<T> {
    pub value: T,
    /// `|I_n - I_{n/2}|` at the final refinement.
    pub error: f64,
    /// Nodes per dimension in the final rule.
    pub nodes: usize,
    pub converged: bool,
}

impl<T> Quadrature<T> {
    /// The value, or an error carrying the achieved accuracy.
    pub fn require(self, tolerance: f64) -> Result<T> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureNotConverged {
                error: self.error,
                tolerance,
            })
        }
    }
}

/// Nodes `x = rho sin^2(theta)` with weights including the Jacobian
/// `rho sin(2 theta)`.
pub fn edge_rule(rho: f64, nodes: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("at least one node"));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(z, w)| {
            let theta = FRAC_PI_2 * 0.5 * (z + 1.0);
            let sin = theta.sin();
            (rho * sin * sin, w * FRAC_PI_2 * 0.5 * rho * (2.0 * theta).sin())
        })
        .collect()
}

fn sum_in_order<T: Integrand>(parts: &[T]) -> T {
    let mut acc = T::default();
    for &p in parts {
        acc += p;
    }
    acc
}

fn refine<T, F>(tolerance: f64, max_nodes: usize, mut at: F) -> Quadrature<T>
where
    T: Integrand + std::ops::Sub<Output = T>,
    F: FnMut(usize) -> T,
{
    let mut nodes = START_NODES;
    let mut prev = at(nodes);
    loop {
        let next_nodes = 2 * nodes;
        let next = at(next_nodes);
        let error = (next - prev).magnitude();
        if error < tolerance || next_nodes >= max_nodes {
            return Quadrature {
                value: next,
                error,
                nodes: next_nodes,
                converged: error < tolerance,
            };
        }
        prev = next;
        nodes = next_nodes;
    }
}

/// `int_0^rho f(x) dx`, refined by doubling until successive rules agree to
/// `tolerance`.
pub fn integrate<T, F>(rho: f64, f: F, tolerance: f64) -> Quadrature<T>
where
    T: Integrand + std::ops::Sub<Output = T>,
    F: Fn(f64) -> T + Sync,
{
    refine(tolerance, MAX_NODES_1D, |n| {
        let parts: Vec<T> = edge_rule(rho, n).iter().map(|&(x, w)| f(x) * w).collect();
        sum_in_order(&parts)
    })
}

/// `int_0^rho int_0^rho f(x, y) dx dy` with a tensor rule; rows are
/// evaluated in parallel and summed in a fixed order.
pub fn integrate_2d<T, F>(rho: f64, f: F, tolerance: f64) -> Quadrature<T>
where
    T: Integrand + std::ops::Sub<Output = T>,
    F: Fn(f64, f64) -> T + Sync,
{
    refine(tolerance, MAX_NODES_2D, |n| {
        let rule = edge_rule(rho, n);
        let rows: Vec<T> = rule
            .par_iter()
            .map(|&(x, wx)| {
                let mut acc = T::default();
                for &(y, wy) in &rule {
                    acc += f(x, y) * wy;
                }
                acc * wx
            })
            .collect();
        sum_in_order(&rows)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn semicircle_area() {
        // int_0^1 sqrt(x (1 - x)) dx = pi / 8
        let q = integrate(1.0, |x: f64| (x * (1.0 - x)).sqrt(), 1e-12);
        assert!(q.converged);
        assert!((q.value - PI / 8.0).abs() < 1e-13);
    }

    #[test]
    fn inverse_square_root_endpoints() {
        // Arcsine law: int_0^1 dx / (pi sqrt(x (1 - x))) = 1
        let q = integrate(1.0, |x: f64| 1.0 / (PI * (x * (1.0 - x)).sqrt()), 1e-12);
        assert!((q.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_integral() {
        let rho = 0.75;
        let q = integrate_2d(rho, |x: f64, y: f64| x * y * y, 1e-12);
        assert!((q.value - rho.powi(2) / 2.0 * rho.powi(3) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn complex_integrand() {
        let z = Complex64::new(2.0, 1.0);
        let q = integrate(1.0, |x: f64| Complex64::new(1.0, 0.0) / (z - x), 1e-12);
        let exact = (z / (z - 1.0)).ln();
        assert!((q.value - exact).norm() < 1e-12);
    }

    #[test]
    fn non_convergence_is_reported() {
        let q = integrate_2d(1.0, |x: f64, y: f64| ((x - y).abs() + 1e-300).ln() * 1e9, 1e-14);
        assert!(!q.converged);
        assert!(q.require(1e-14).is_err());
    }
}
