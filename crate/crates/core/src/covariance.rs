//! The covariance form `H(f, g) = E[T(f) T(g)]` from walk counts.
//!
//! With `o` a fixed vertex (vertex 0), `C` the row covariance of the sampler,
//! `n(v, a)` the neighbor of `v` in slot `a` and `c_k = M^k e_o`,
//!
//! ```text
//! F1_{k,l}(v) = sum_{a,b} C[a][b] (M^k e_{n(o,a)})(v) (M^l e_{n(o,b)})(v)
//! F2_{k,l}(v) = sum_{a,b} C[a][b] c_k(n(v,a)) c_l(n(v,b))
//! alpha_ij    = sum_{v != o} sum_{i1+i2=i-2} sum_{j1+j2=j-2} F1_{i1,j1}(v) F2_{i2,j2}(v)
//! H(f, g)     = 1/2 sum_{i,j} i j alpha_ij [x^i]f [x^j]g
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::EnvironmentSampler;
use crate::error::{invalid, Result};
use crate::graphs::{TransitiveGraph, TruncatedTree};
use crate::series::PowerSeries;
use crate::walks::{pairwise_sum, walk_columns, WalkGraph};

/// Default cap on monomial degrees.
pub const DEFAULT_DEGREE_CAP: usize = 12;

/// Largest `n (K+1)^2` work array the alpha computation will allocate.
const MAX_WORK: usize = 60_000_000;

/// `alpha_ij` for `0 <= i, j <= imax` on one graph (or truncated tree).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTable {
    /// Graph label, or `tree d=.. depth=..`.
    pub source: String,
    pub sampler: String,
    pub d: usize,
    pub imax: usize,
    /// `None` for trees.
    pub girth: Option<usize>,
    pub c1: f64,
    /// `values[i][j] = alpha_ij`.
    pub values: Vec<Vec<f64>>,
    /// `tree_exact[i][j]`: the local structure seen by `alpha_ij` is a tree,
    /// so the value equals the infinite-tree coefficient.
    pub tree_exact: Vec<Vec<bool>>,
}

impl AlphaTable {
    pub fn for_graph(g: &TransitiveGraph, s: &EnvironmentSampler, imax: usize) -> Result<Self> {
        if s.d() != g.d() {
            return Err(invalid!(
                "sampler has d = {}, graph {} has d = {}",
                s.d(),
                g.label(),
                g.d()
            ));
        }
        let values = alpha_values(g, s.row_covariance(), imax)?;
        let girth = g.girth();
        Ok(AlphaTable {
            source: g.label().to_string(),
            sampler: s.to_string(),
            d: g.d(),
            imax,
            girth: Some(girth),
            c1: s.c1(),
            values,
            tree_exact: flags(imax, |i, j| i + j + 2 <= girth),
        })
    }

    /// The infinite-tree table, computed on a tree of depth `imax + 1`.
    pub fn tree(d: usize, s: &EnvironmentSampler, imax: usize) -> Result<Self> {
        Self::tree_with_depth(d, s, imax, imax + 1)
    }

    pub fn tree_with_depth(
        d: usize,
        s: &EnvironmentSampler,
        imax: usize,
        depth: usize,
    ) -> Result<Self> {
        if s.d() != d {
            return Err(invalid!("sampler has d = {}, tree has d = {d}", s.d()));
        }
        let tree = TruncatedTree::new(d, depth)?;
        let values = alpha_values(&tree, s.row_covariance(), imax)?;
        Ok(AlphaTable {
            source: format!("tree d={d} depth={depth}"),
            sampler: s.to_string(),
            d,
            imax,
            girth: None,
            c1: s.c1(),
            values,
            tree_exact: flags(imax, |i, j| depth >= required_depth(i, j)),
        })
    }

    pub fn alpha(&self, i: usize, j: usize) -> Result<f64> {
        if i > self.imax || j > self.imax {
            return Err(invalid!(
                "alpha_({i},{j}) requested from a table capped at {}",
                self.imax
            ));
        }
        Ok(self.values[i][j])
    }

    /// `E[T(z^i) T(z^j)] = i j alpha_ij / 2`.
    pub fn monomial_covariance(&self, i: usize, j: usize) -> Result<f64> {
        Ok(0.5 * (i * j) as f64 * self.alpha(i, j)?)
    }

    /// `E[T(z^i) T(z^j)]` equals the table value exactly (and both means
    /// vanish) when every diagonal `(B M^k)_{vv}` with `k <= max(i,j) - 2`
    /// is zero, which the girth guarantees for `max(i, j) <= girth - 2`.
    pub fn gated(&self, i: usize, j: usize) -> bool {
        match self.girth {
            Some(girth) => i.max(j) + 2 <= girth,
            None => true,
        }
    }

    pub fn is_tree_exact(&self, i: usize, j: usize) -> bool {
        self.tree_exact
            .get(i)
            .and_then(|r| r.get(j))
            .copied()
            .unwrap_or(false)
    }

    pub fn h_form(&self, f: &PowerSeries, g: &PowerSeries) -> Result<f64> {
        self.check_degree(f)?;
        self.check_degree(g)?;
        let mut acc = 0.0;
        for (i, a) in f.coeffs().iter().enumerate().skip(2) {
            for (j, b) in g.coeffs().iter().enumerate().skip(2) {
                acc += (i * j) as f64 * self.values[i][j] * a * b;
            }
        }
        Ok(0.5 * acc)
    }

    /// `c1^4 ||f||_* ||g||_*`.
    pub fn h_bound(&self, f: &PowerSeries, g: &PowerSeries) -> f64 {
        self.c1.powi(4) * f.star_norm() * g.star_norm()
    }

    /// Whether every coefficient pair used by `h_form(f, g)` is gated.
    pub fn h_gated(&self, f: &PowerSeries, g: &PowerSeries) -> bool {
        self.girth.is_none_or(|girth| f.degree().max(g.degree()) + 2 <= girth)
    }

    pub fn h_tree_exact(&self, f: &PowerSeries, g: &PowerSeries) -> bool {
        support(f)
            .iter()
            .all(|&i| support(g).iter().all(|&j| self.is_tree_exact(i, j)))
    }

    fn check_degree(&self, f: &PowerSeries) -> Result<()> {
        if f.degree() > self.imax {
            return Err(invalid!(
                "series degree {} exceeds the table cap {}",
                f.degree(),
                self.imax
            ));
        }
        if f.is_truncated() {
            return Err(invalid!("h_form needs an exact polynomial, got a truncated series"));
        }
        Ok(())
    }
}

fn support(f: &PowerSeries) -> Vec<usize> {
    (2..=f.degree()).filter(|&k| f.coeff(k) != 0.0).collect()
}

fn flags(imax: usize, ok: impl Fn(usize, usize) -> bool) -> Vec<Vec<bool>> {
    (0..=imax)
        .map(|i| (0..=imax).map(|j| ok(i, j)).collect())
        .collect()
}

/// Smallest truncation depth for which `tree_alpha(i, j)` is exact.
pub fn required_depth(i: usize, j: usize) -> usize {
    (i + j).div_ceil(2) + 1
}

/// `alpha_ij` on `g` with sampler `s`.
pub fn alpha(g: &TransitiveGraph, s: &EnvironmentSampler, i: usize, j: usize) -> Result<f64> {
    AlphaTable::for_graph(g, s, i.max(j))?.alpha(i, j)
}

/// `alpha_ij` of the infinite `d`-regular tree, computed on a tree truncated
/// at `depth`.
pub fn tree_alpha(
    d: usize,
    s: &EnvironmentSampler,
    i: usize,
    j: usize,
    depth: usize,
) -> Result<f64> {
    let need = required_depth(i, j);
    if depth < need {
        return Err(invalid!(
            "tree depth {depth} is too shallow for alpha_({i},{j}); need at least {need}"
        ));
    }
    AlphaTable::tree_with_depth(d, s, i.max(j), depth)?.alpha(i, j)
}

pub fn h_form(table: &AlphaTable, f: &PowerSeries, g: &PowerSeries) -> Result<f64> {
    table.h_form(f, g)
}

/// All `alpha_ij`, `i, j <= imax`, for a graph rooted at vertex 0 with row
/// covariance `cov` (row-major `d x d`).
pub fn alpha_values<G: WalkGraph + ?Sized>(
    g: &G,
    cov: &[f64],
    imax: usize,
) -> Result<Vec<Vec<f64>>> {
    alpha_values_at(g, cov, imax, 0)
}

/// As [`alpha_values`] with the marked vertex `o`.
pub fn alpha_values_at<G: WalkGraph + ?Sized>(
    g: &G,
    cov: &[f64],
    imax: usize,
    o: usize,
) -> Result<Vec<Vec<f64>>> {
    let d = g.degree();
    if cov.len() != d * d {
        return Err(invalid!("row covariance has {} entries, expected {}", cov.len(), d * d));
    }
    let mut values = vec![vec![0.0; imax + 1]; imax + 1];
    if imax < 2 {
        return Ok(values);
    }
    let n = g.vertex_count();
    let kmax = imax - 2;
    let width = kmax + 1;
    if n.saturating_mul(width * width) > MAX_WORK {
        return Err(invalid!(
            "alpha up to degree {imax} on {n} vertices needs too much memory"
        ));
    }
    if o >= n {
        return Err(invalid!("root {o} out of range 0..{n}"));
    }
    let from_o: Vec<Vec<Vec<f64>>> = g
        .neighbors(o)
        .iter()
        .map(|&x| walk_columns(g, x as usize, kmax))
        .collect();
    let back = walk_columns(g, o, kmax);

    // f1[(k * width + l) * n + v], f2 likewise.
    let mut f1 = vec![0.0; width * width * n];
    let mut f2 = vec![0.0; width * width * n];
    f1.par_chunks_mut(n)
        .zip(f2.par_chunks_mut(n))
        .enumerate()
        .for_each(|(kl, (f1, f2))| {
            let (k, l) = (kl / width, kl % width);
            let mut xk = vec![0.0; d];
            let mut xl = vec![0.0; d];
            for v in 0..n {
                for (a, cols) in from_o.iter().enumerate() {
                    xk[a] = cols[k][v];
                    xl[a] = cols[l][v];
                }
                f1[v] = quadratic(cov, d, &xk, &xl, from_o.len());
                let nb = g.neighbors(v);
                for (b, &w) in nb.iter().enumerate() {
                    xk[b] = back[k][w as usize];
                    xl[b] = back[l][w as usize];
                }
                f2[v] = quadratic(cov, d, &xk, &xl, nb.len());
            }
        });

    let pairs: Vec<(usize, usize)> = (2..=imax)
        .flat_map(|i| (i..=imax).map(move |j| (i, j)))
        .collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut per_vertex = vec![0.0; n];
            for i1 in 0..=i - 2 {
                for j1 in 0..=j - 2 {
                    let a = &f1[(i1 * width + j1) * n..][..n];
                    let b = &f2[((i - 2 - i1) * width + (j - 2 - j1)) * n..][..n];
                    for v in 0..n {
                        per_vertex[v] += a[v] * b[v];
                    }
                }
            }
            per_vertex[o] = 0.0;
            pairwise_sum(&per_vertex)
        })
        .collect();
    for (&(i, j), &x) in pairs.iter().zip(&entries) {
        values[i][j] = x;
        values[j][i] = x;
    }
    Ok(values)
}

/// `sum_{a,b < len} C[a][b] x[a] y[b]`.
fn quadratic(cov: &[f64], d: usize, x: &[f64], y: &[f64], len: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..len {
        if x[a] == 0.0 {
            continue;
        }
        let row = &cov[a * d..a * d + len];
        let cy: f64 = row.iter().zip(&y[..len]).map(|(c, y)| c * y).sum();
        acc += x[a] * cy;
    }
    acc
}
