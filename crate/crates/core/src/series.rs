//! Test functions as power series `f(z) = sum a_k z^k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A power series with a finite head of real coefficients.
///
/// When the series was cut from a longer one, `tail_star` and `tail_abs`
/// record `sum k^2 |a_k|` and `sum |a_k|` over the dropped coefficients, so
/// error bounds stay available after truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
    radius: f64,
    #[serde(default)]
    tail_star: f64,
    #[serde(default)]
    tail_abs: f64,
}

impl PowerSeries {
    /// An entire function (polynomial) with the given coefficients.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let mut f = PowerSeries {
            coeffs,
            radius: f64::INFINITY,
            tail_star: 0.0,
            tail_abs: 0.0,
        };
        f.trim();
        f
    }

    pub fn monomial(j: usize) -> Self {
        let mut c = vec![0.0; j + 1];
        c[j] = 1.0;
        Self::polynomial(c)
    }

    /// A series with declared convergence radius, which must exceed 1.
    pub fn with_radius(coeffs: Vec<f64>, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 1.0 {
            return Err(invalid!("convergence radius must exceed 1, got {radius}"));
        }
        let mut f = PowerSeries {
            coeffs,
            radius,
            tail_star: 0.0,
            tail_abs: 0.0,
        };
        f.trim();
        Ok(f)
    }

    /// The first `terms` coefficients of `k -> a_k`, with the remainder of
    /// the series summed into the tail bounds until it is negligible.
    pub fn from_fn<F: Fn(usize) -> f64>(radius: f64, terms: usize, a: F) -> Result<Self> {
        let mut f = Self::with_radius((0..terms).map(&a).collect(), radius)?;
        let (mut star, mut abs) = (0.0, 0.0);
        let mut quiet = 0;
        for k in terms..terms + 100_000 {
            let c = a(k).abs();
            let s = c * (k * k) as f64;
            star += s;
            abs += c;
            quiet = if s <= 1e-18 * star.max(1e-300) || s == 0.0 { quiet + 1 } else { 0 };
            if quiet >= 16 {
                break;
            }
        }
        f.tail_star = star;
        f.tail_abs = abs;
        Ok(f)
    }

    /// `p_lambda(z) = 1 / (1 - lambda z)`, real `|lambda| < 1`.
    pub fn resolvent(lambda: f64, terms: usize) -> Result<Self> {
        if lambda.abs() >= 1.0 {
            return Err(invalid!("resolvent needs |lambda| < 1, got {lambda}"));
        }
        let radius = if lambda == 0.0 { f64::INFINITY } else { 1.0 / lambda.abs() };
        Self::from_fn(radius, terms, |k| lambda.powi(k as i32))
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Index of the last stored coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_truncated(&self) -> bool {
        self.tail_star > 0.0 || self.tail_abs > 0.0
    }

    pub fn tail_star(&self) -> f64 {
        self.tail_star
    }

    pub fn tail_abs(&self) -> f64 {
        self.tail_abs
    }

    /// `||f||_* = sum_{k>=1} k^2 |a_k|`, including any recorded tail.
    pub fn star_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| (k * k) as f64 * a.abs())
            .sum::<f64>()
            + self.tail_star
    }

    /// Keeps coefficients up to `degree`, moving the rest into the tail.
    pub fn truncate(&self, degree: usize) -> Self {
        let mut f = self.clone();
        if degree < self.degree() {
            for (k, a) in self.coeffs.iter().enumerate().skip(degree + 1) {
                f.tail_star += (k * k) as f64 * a.abs();
                f.tail_abs += a.abs();
            }
            f.coeffs.truncate(degree + 1);
            f.trim();
        }
        f
    }

    /// `f(z^2)`: every coefficient moves to twice its index.
    pub fn compose_square(&self) -> Self {
        let mut c = vec![0.0; 2 * self.degree() + 1];
        for (k, a) in self.coeffs.iter().enumerate() {
            c[2 * k] = *a;
        }
        PowerSeries {
            coeffs: c,
            radius: self.radius.sqrt(),
            // k^2 |a_k| becomes (2k)^2 |a_k|.
            tail_star: 4.0 * self.tail_star,
            tail_abs: self.tail_abs,
        }
    }

    /// `alpha f + beta g`.
    pub fn combine(&self, alpha: f64, other: &PowerSeries, beta: f64) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len)
            .map(|k| alpha * self.coeff(k) + beta * other.coeff(k))
            .collect();
        let mut f = PowerSeries {
            coeffs,
            radius: self.radius.min(other.radius),
            tail_star: alpha.abs() * self.tail_star + beta.abs() * other.tail_star,
            tail_abs: alpha.abs() * self.tail_abs + beta.abs() * other.tail_abs,
        };
        f.trim();
        f
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
    }

    pub fn derivative_eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, a)| acc * x + k as f64 * a)
    }
}

impl FromStr for PowerSeries {
    type Err = Error;

    /// `coeffs=0,0,1` optionally followed by `radius=R` (space or `;`
    /// separated). A bare comma list is accepted too.
    fn from_str(s: &str) -> Result<Self> {
        let mut coeffs = None;
        let mut radius = f64::INFINITY;
        for part in s.split([' ', ';']).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some(("coeffs", v)) => coeffs = Some(v),
                Some(("radius", v)) => {
                    radius = v.parse().map_err(|_| invalid!("bad radius {v:?}"))?
                }
                Some((k, _)) => return Err(invalid!("unknown series field {k:?}")),
                None => coeffs = Some(part),
            }
        }
        let list = coeffs.ok_or_else(|| invalid!("series needs coeffs=..."))?;
        let c = list
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| invalid!("bad coefficient list {list:?}"))?;
        if c.is_empty() {
            return Err(invalid!("empty coefficient list"));
        }
        Self::with_radius(c, radius)
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c: Vec<String> = self.coeffs.iter().map(f64::to_string).collect();
        write!(f, "coeffs={}", c.join(","))?;
        if self.radius.is_finite() {
            write!(f, " radius={}", self.radius)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_norm_examples() {
        assert_eq!(PowerSeries::monomial(3).star_norm(), 9.0);
        assert_eq!(PowerSeries::polynomial(vec![1.0]).star_norm(), 0.0);
        assert_eq!(PowerSeries::polynomial(vec![0.0, 1.0, 1.0]).star_norm(), 5.0);
    }

    #[test]
    fn truncation_keeps_the_norm() {
        let f = PowerSeries::polynomial(vec![1.0, -2.0, 0.5, 3.0, -1.0]);
        let t = f.truncate(2);
        assert_eq!(t.degree(), 2);
        assert_eq!(t.star_norm(), f.star_norm());
        assert_eq!(t.tail_abs(), 4.0);
    }

    #[test]
    fn resolvent_tail_matches_closed_form() {
        let lambda: f64 = 0.5;
        let f = PowerSeries::resolvent(lambda, 10).unwrap();
        // sum_{k>=1} k^2 x^k = x (1 + x) / (1 - x)^3
        let exact = lambda * (1.0 + lambda) / (1.0 - lambda).powi(3);
        assert!((f.star_norm() - exact).abs() < 1e-12);
        assert!(PowerSeries::resolvent(1.0, 5).is_err());
    }

    #[test]
    fn radius_must_exceed_one() {
        assert!(PowerSeries::with_radius(vec![1.0], 1.0).is_err());
        assert!("coeffs=1,2 radius=0.5".parse::<PowerSeries>().is_err());
    }

    #[test]
    fn parse_and_evaluate() {
        let f: PowerSeries = "coeffs=0,0,1".parse().unwrap();
        assert_eq!(f, PowerSeries::monomial(2));
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.derivative_eval(3.0), 6.0);
        let g: PowerSeries = "coeffs=1,2,3 radius=4".parse().unwrap();
        assert_eq!(g.radius(), 4.0);
        assert_eq!(g.to_string().parse::<PowerSeries>().unwrap(), g);
    }

    #[test]
    fn compose_square_spreads_coefficients() {
        let f = PowerSeries::polynomial(vec![0.0, 1.0, 1.0]).compose_square();
        assert_eq!(f.coeffs(), &[0.0, 0.0, 1.0, 0.0, 1.0]);
    }
}
