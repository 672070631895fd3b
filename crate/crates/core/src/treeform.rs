//! Closed forms on the infinite `d`-regular tree: Green's function, the
//! covariance kernel `beta_d` and the limiting spectral density of `M^2`.
//!
//! Notation: `rho = 4(d-1)/d^2`, `s = sqrt(1 - rho lambda^2)` on the
//! principal branch, `a = 2 lambda / (d (1 + s))`, `b = 1 / (1 - lambda a)`.
//! The resolvent `(I - lambda M)^{-1}` has entries `b a^r` at distance `r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, out_of_domain, Result};
use crate::quadrature::{integrate, integrate_2d, Quadrature};
use crate::series::PowerSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    d: f64,
    rho: f64,
}

impl TreeModel {
    /// Real `d >= 2` is accepted; only kernel evaluations make sense for
    /// non-integer `d`.
    pub fn new(d: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 2.0) {
            return Err(invalid!("tree degree must be a finite number >= 2, got {d}"));
        }
        Ok(TreeModel {
            d,
            rho: 4.0 * (d - 1.0) / (d * d),
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `s = sqrt(1 - rho lambda^2)`, principal branch (`Re s >= 0`).
    pub fn s(&self, lambda: Complex64) -> Complex64 {
        (1.0 - self.rho * lambda * lambda).sqrt()
    }

    /// `s` as a function of `u = lambda^{-2}`: `sqrt(1 - rho / u)`.
    pub fn s_of_u(&self, u: Complex64) -> Complex64 {
        (1.0 - self.rho / u).sqrt()
    }

    fn check_lambda(&self, lambda: Complex64) -> Result<()> {
        if !(lambda.norm() < 1.0) {
            return Err(out_of_domain!("need |lambda| < 1, got {lambda}"));
        }
        Ok(())
    }

    /// `(a_lambda, b_lambda)`; `(0, 1)` at `lambda = 0`.
    pub fn green_coeffs(&self, lambda: Complex64) -> Result<(Complex64, Complex64)> {
        self.check_lambda(lambda)?;
        let s = self.s(lambda);
        // Same as d (1 - s) / (2 (d-1) lambda) without the cancellation.
        let a = 2.0 * lambda / (self.d * (1.0 + s));
        let b = 1.0 / (1.0 - lambda * a);
        Ok((a, b))
    }

    /// Resolvent entry at distance `r`.
    pub fn green(&self, lambda: Complex64, r: usize) -> Result<Complex64> {
        let (a, b) = self.green_coeffs(lambda)?;
        Ok(b * a.powu(r as u32))
    }

    /// `G(r - 1) - G(r + 1) = b (1 - a^2) a^{r-1}`, `r >= 1`.
    pub fn green_star(&self, lambda: Complex64, r: usize) -> Result<Complex64> {
        if r < 1 {
            return Err(invalid!("green_star needs r >= 1"));
        }
        let (a, b) = self.green_coeffs(lambda)?;
        Ok(b * (1.0 - a * a) * a.powu(r as u32 - 1))
    }

    /// Both closed forms of `2d sum_{r>=1} (d-1)^{r-1} G*_lambda(r)^2 G*_mu(r)^2`:
    /// the Green-coefficient form and the form in `s, t`.
    pub fn lhs_closed_forms(&self, lambda: Complex64, mu: Complex64) -> Result<(Complex64, Complex64)> {
        let (al, bl) = self.green_coeffs(lambda)?;
        let (am, bm) = self.green_coeffs(mu)?;
        let d = self.d;
        let ratio = {
            let bb = bl * bm;
            let num = 2.0 * bb * bb * (1.0 - al * al).powu(2) * (1.0 - am * am).powu(2) * d;
            num / (1.0 - (d - 1.0) * (al * am).powu(2))
        };
        let st = self.beta_hat(self.s(lambda), self.s(mu));
        Ok((ratio, st))
    }

    /// The `s, t` form, returned after checking it against the other one.
    pub fn lhs_closed(&self, lambda: Complex64, mu: Complex64) -> Result<Complex64> {
        let (ratio, st) = self.lhs_closed_forms(lambda, mu)?;
        if (ratio - st).norm() > 1e-10 * st.norm().max(1.0) {
            return Err(out_of_domain!(
                "closed forms disagree at lambda={lambda}, mu={mu}: {ratio} vs {st}"
            ));
        }
        Ok(st)
    }

    /// `32 (d-1) d / ((1+s)(1+t)((d-2)(1+s)(1+t) + 2(s+t)))`.
    pub fn beta_hat(&self, s: Complex64, t: Complex64) -> Complex64 {
        let d = self.d;
        let p = (1.0 + s) * (1.0 + t);
        32.0 * (d - 1.0) * d / (p * ((d - 2.0) * p + 2.0 * (s + t)))
    }

    fn check_kernel(&self, x: f64, y: f64) -> Result<()> {
        if self.d <= 2.0 {
            return Err(out_of_domain!(
                "the d = 2 kernel is singular; use kernel_beta2_diagonal"
            ));
        }
        for v in [x, y] {
            if !(v > 0.0 && v < self.rho) {
                return Err(out_of_domain!("{v} lies outside (0, {})", self.rho));
            }
        }
        Ok(())
    }

    /// `kappa(x) = 2d sqrt(x (rho - x))`.
    pub fn kappa(&self, x: f64) -> f64 {
        2.0 * self.d * (x * (self.rho - x)).max(0.0).sqrt()
    }

    /// The covariance kernel `beta_d(x, y)` on `(0, rho)^2`, `d > 2`.
    pub fn kernel_beta(&self, x: f64, y: f64) -> Result<f64> {
        self.check_kernel(x, y)?;
        Ok(self.kernel_beta_unchecked(x, y))
    }

    fn kernel_beta_unchecked(&self, x: f64, y: f64) -> f64 {
        let d = self.d;
        let rho = self.rho;
        let diff = x - y;
        let diff2 = diff * diff;
        let km = self.kappa(0.5 * (x + y));
        let a = rho * km * km + 4.0 * (d + 3.0) * diff2 + rho * rho * (d - 2.0).powi(2);
        let num = 2.0 * d.powi(4) / (PI * PI) * (d - 2.0) * self.kappa(x) * self.kappa(y);
        num / (16.0 * (2.0 * d - 3.0) * diff2 + (d - 2.0).powi(2) * a)
    }

    /// `beta_d(x, y)` from boundary values of `beta_hat` on the cut:
    /// `-(1 / 4 pi^2 x y) sum_{sigma,tau = +-1} sigma tau beta_hat(sigma s, tau t)`
    /// with `s = i sqrt(rho/x - 1)`, `t = i sqrt(rho/y - 1)`.
    pub fn kernel_beta_boundary_check(&self, x: f64, y: f64) -> Result<f64> {
        self.check_kernel(x, y)?;
        let s = Complex64::new(0.0, (self.rho / x - 1.0).sqrt());
        let t = Complex64::new(0.0, (self.rho / y - 1.0).sqrt());
        let mut acc = Complex64::new(0.0, 0.0);
        for sigma in [1.0, -1.0] {
            for tau in [1.0, -1.0] {
                acc += sigma * tau * self.beta_hat(sigma * s, tau * t);
            }
        }
        Ok(-acc.re / (4.0 * PI * PI * x * y))
    }

    /// Limiting density of the eigenvalues of `M^2` (squared Kesten–McKay
    /// law), `(d / 2 pi) sqrt(rho - x) / (sqrt(x) (1 - x))` on `(0, rho)`.
    pub fn limit_density(&self, x: f64) -> f64 {
        if !(x > 0.0 && x < self.rho) {
            return 0.0;
        }
        self.d / (2.0 * PI) * (self.rho - x).sqrt() / (x.sqrt() * (1.0 - x))
    }

    /// `int_0^rho limit_density`; should be 1.
    pub fn limit_density_mass(&self, tolerance: f64) -> Quadrature<f64> {
        integrate(self.rho, |x| self.limit_density(x), tolerance)
    }

    /// `beta_d(rho/2, rho/2) / beta_d(rho/4, 3 rho/4)`: how strongly the
    /// kernel concentrates on the diagonal.
    pub fn localization_ratio(&self) -> Result<f64> {
        let r = self.rho;
        Ok(self.kernel_beta(0.5 * r, 0.5 * r)? / self.kernel_beta(0.25 * r, 0.75 * r)?)
    }

    /// `E[T~(f) T~(g)] = int int f'(x) g'(y) beta_d(x, y) dx dy` for `d > 2`,
    /// and `(32/pi) int f'(x) g'(x) sqrt(x (1 - x)) dx` for `d = 2`.
    pub fn tree_covariance(&self, f: &PowerSeries, g: &PowerSeries, tolerance: f64) -> Quadrature<f64> {
        if self.d == 2.0 {
            return integrate(
                1.0,
                |x| f.derivative_eval(x) * g.derivative_eval(x) * kernel_beta2_diagonal_unchecked(x),
                tolerance,
            );
        }
        integrate_2d(
            self.rho,
            |x, y| f.derivative_eval(x) * g.derivative_eval(y) * self.kernel_beta_unchecked(x, y),
            tolerance,
        )
    }

    /// `int int beta_d(x, y) / ((1 - lambda^2 x)(1 - mu^2 y)) dx dy`, the
    /// Stieltjes-type transform that should reproduce [`TreeModel::lhs_closed`].
    pub fn stieltjes_transform(
        &self,
        lambda: Complex64,
        mu: Complex64,
        tolerance: f64,
    ) -> Result<Quadrature<Complex64>> {
        if self.d <= 2.0 {
            return Err(out_of_domain!("the Stieltjes check needs d > 2"));
        }
        self.check_lambda(lambda)?;
        self.check_lambda(mu)?;
        for p in [lambda, mu] {
            if p.norm() > 0.0 && distance_to_segment(1.0 / (p * p), self.rho) < 10.0 * tolerance {
                return Err(out_of_domain!("{p}^-2 lies on the cut [0, {}]", self.rho));
            }
        }
        let (l2, m2) = (lambda * lambda, mu * mu);
        Ok(integrate_2d(
            self.rho,
            |x, y| {
                let w = self.kernel_beta_unchecked(x, y);
                Complex64::new(w, 0.0) / ((1.0 - l2 * x) * (1.0 - m2 * y))
            },
            tolerance,
        ))
    }

    /// `|lhs_closed(lambda, mu) - stieltjes_transform(lambda, mu)|`.
    pub fn stieltjes_residual(&self, lambda: Complex64, mu: Complex64, tolerance: f64) -> Result<f64> {
        let lhs = self.lhs_closed(lambda, mu)?;
        let rhs = self.stieltjes_transform(lambda, mu, tolerance)?.require(tolerance)?;
        Ok((lhs - rhs).norm())
    }
}

fn distance_to_segment(u: Complex64, rho: f64) -> f64 {
    let x = u.re.clamp(0.0, rho);
    (u - x).norm()
}

/// Diagonal weight of the `d = 2` kernel, `(32/pi) sqrt(x (1 - x))`.
pub fn kernel_beta2_diagonal(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(out_of_domain!("{x} lies outside (0, 1)"));
    }
    Ok(kernel_beta2_diagonal_unchecked(x))
}

fn kernel_beta2_diagonal_unchecked(x: f64) -> f64 {
    32.0 / PI * (x * (1.0 - x)).max(0.0).sqrt()
}

pub fn limit_density(t: &TreeModel, x: f64) -> f64 {
    t.limit_density(x)
}

/// Evaluation grid of `beta_d` at cell midpoints of `(0, rho)^2`.
pub fn kernel_grid(t: &TreeModel, nx: usize, ny: usize) -> Result<Vec<(f64, f64, f64)>> {
    if nx == 0 || ny == 0 {
        return Err(invalid!("grid needs at least one point per axis"));
    }
    let rho = t.rho();
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let x = rho * (i as f64 + 0.5) / nx as f64;
        for j in 0..ny {
            let y = rho * (j as f64 + 0.5) / ny as f64;
            out.push((x, y, t.kernel_beta(x, y)?));
        }
    }
    Ok(out)
}
