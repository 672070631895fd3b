//! Spectral functionals of a perturbed walk.
//!
//! For a finite graph with perturbation `B`,
//!
//! ```text
//! T(z^j) = n^{-1/2} (j/2) sum_{k1 + k2 = j - 2} Tr(B M^k1 B M^k2),
//! T(f)   = sum_j a_j T(z^j),
//! m_eps(f) = n^{-1/2} eps^{-2} (Tr f(M + eps B) - Tr f(M)).
//! ```
//!
//! Traces are exact. Each diagonal entry `(B M^k1 B M^k2)_{vv}` only sees the
//! ball of radius `k1 + 1` around `v`, so the work per vertex is local.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::Perturbation;
use crate::error::{invalid, Result};
use crate::graphs::TransitiveGraph;
use crate::series::PowerSeries;
use crate::walks::{pairwise_sum, Ball, LocalBalls, WalkGraph, OUTSIDE};

pub fn star_norm(f: &PowerSeries) -> f64 {
    f.star_norm()
}

/// Exact trace machinery for one graph and all monomials up to a degree.
///
/// Construction precomputes the local balls, so reuse one engine across many
/// perturbations of the same graph.
#[derive(Debug, Clone)]
pub struct TraceEngine<'g> {
    graph: &'g TransitiveGraph,
    max_degree: usize,
    balls: Option<LocalBalls>,
}

/// Per-vertex work buffers.
struct Scratch {
    row: Vec<f64>,
    col: Vec<f64>,
    q: Vec<f64>,
}

impl<'g> TraceEngine<'g> {
    pub fn new(graph: &'g TransitiveGraph, max_degree: usize) -> Self {
        let balls = (max_degree >= 2).then(|| LocalBalls::new(graph, max_degree - 1));
        TraceEngine {
            graph,
            max_degree,
            balls,
        }
    }

    pub fn graph(&self) -> &TransitiveGraph {
        self.graph
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    fn check(&self, b: &Perturbation) -> Result<()> {
        if b.n() != self.graph.n() || b.d() != self.graph.d() {
            return Err(invalid!(
                "perturbation is {}x{}, graph {} is {}x{}",
                b.n(),
                b.d(),
                self.graph.label(),
                self.graph.n(),
                self.graph.d()
            ));
        }
        Ok(())
    }

    /// `traces[k1 * (K+1) + k2] = Tr(B M^k1 B M^k2)` for `k1, k2 <= K`,
    /// where `K = max_degree - 2`. Vertices are processed in parallel.
    pub fn traces(&self, b: &Perturbation) -> Result<Vec<f64>> {
        self.traces_with(b, true)
    }

    /// As [`TraceEngine::traces`], optionally on the calling thread only
    /// (useful when many perturbations are processed in parallel). Both paths
    /// give bit-identical results.
    pub fn traces_with(&self, b: &Perturbation, parallel: bool) -> Result<Vec<f64>> {
        self.check(b)?;
        let Some(balls) = &self.balls else {
            return Ok(Vec::new());
        };
        let kmax = self.max_degree - 2;
        let width = (kmax + 1) * (kmax + 1);
        let n = self.graph.n();
        let mut per_vertex = vec![0.0; n * width];
        let new_scratch = || Scratch {
            row: Vec::new(),
            col: Vec::new(),
            q: Vec::new(),
        };
        if parallel {
            per_vertex
                .par_chunks_mut(width)
                .enumerate()
                .with_min_len(64)
                .for_each_init(new_scratch, |s, (v, out)| {
                    vertex_traces(balls.ball(v), b, kmax, s, out)
                });
        } else {
            let mut s = new_scratch();
            for (v, out) in per_vertex.chunks_mut(width).enumerate() {
                vertex_traces(balls.ball(v), b, kmax, &mut s, out);
            }
        }
        let mut column = vec![0.0; n];
        Ok((0..width)
            .map(|e| {
                for (c, v) in column.iter_mut().zip(per_vertex.iter().skip(e).step_by(width)) {
                    *c = *v;
                }
                pairwise_sum(&column)
            })
            .collect())
    }

    /// `T(z^j)` for `j = 0..=max_degree`.
    pub fn monomials(&self, b: &Perturbation) -> Result<Vec<f64>> {
        self.monomials_with(b, true)
    }

    pub fn monomials_with(&self, b: &Perturbation, parallel: bool) -> Result<Vec<f64>> {
        let tr = self.traces_with(b, parallel)?;
        Ok(monomials_from_traces(&tr, self.max_degree, self.graph.n()))
    }

    pub fn t_function(&self, b: &Perturbation, f: &PowerSeries) -> Result<TValue> {
        if f.degree() > self.max_degree {
            return Err(invalid!(
                "series degree {} exceeds engine degree {}",
                f.degree(),
                self.max_degree
            ));
        }
        let t = self.monomials(b)?;
        Ok(TValue {
            t: combine(f, &t),
            tail_bound: tail_bound(b, f),
        })
    }
}

/// `T(z^j)` for `j <= max_degree` from the trace table of a [`TraceEngine`].
pub fn monomials_from_traces(tr: &[f64], max_degree: usize, n: usize) -> Vec<f64> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = vec![0.0; max_degree + 1];
    if max_degree < 2 {
        return out;
    }
    let stride = max_degree - 1;
    for (j, o) in out.iter_mut().enumerate().skip(2) {
        let s: f64 = (0..=j - 2).map(|k1| tr[k1 * stride + (j - 2 - k1)]).sum();
        *o = scale * 0.5 * j as f64 * s;
    }
    out
}

fn combine(f: &PowerSeries, t: &[f64]) -> f64 {
    f.coeffs().iter().zip(t).map(|(a, t)| a * t).sum()
}

fn tail_bound(b: &Perturbation, f: &PowerSeries) -> f64 {
    b.c1() * b.c1() * (b.n() as f64).sqrt() * f.tail_star()
}

fn vertex_traces(ball: &Ball, b: &Perturbation, kmax: usize, s: &mut Scratch, out: &mut [f64]) {
    let len = ball.len();
    let k1 = kmax + 1;
    s.row.clear();
    s.row.resize(k1 * len, 0.0);
    s.col.clear();
    s.col.resize(k1 * len, 0.0);
    s.q.clear();
    s.q.resize(k1 * len, 0.0);

    // row_k = e_v^T B M^k, supported within distance k + 1.
    let v = ball.vertices[0] as usize;
    for (a, &p) in ball.neighbor_positions(0).iter().enumerate() {
        s.row[p as usize] += b.row(v)[a];
    }
    // col_k = M^k e_v, supported within distance k.
    s.col[0] = 1.0;
    for k in 1..=kmax {
        let (prev, cur) = s.row.split_at_mut(k * len);
        ball.step(&prev[(k - 1) * len..], &mut cur[..len], k + 1);
        let (prev, cur) = s.col.split_at_mut(k * len);
        ball.step(&prev[(k - 1) * len..], &mut cur[..len], k);
    }
    // q_k = B M^k e_v, supported within distance k + 1.
    for k in 0..=kmax {
        let col = &s.col[k * len..(k + 1) * len];
        let q = &mut s.q[k * len..(k + 1) * len];
        for (p, qp) in q.iter_mut().enumerate().take(ball.within(k + 1)) {
            let w = ball.vertices[p] as usize;
            let mut acc = 0.0;
            for (bw, &pos) in b.row(w).iter().zip(ball.neighbor_positions(p)) {
                if pos != OUTSIDE {
                    acc += bw * col[pos as usize];
                }
            }
            *qp = acc;
        }
    }

    for a in 0..=kmax {
        let row = &s.row[a * len..(a + 1) * len];
        for c in 0..=kmax {
            let m = ball.within(a.min(c) + 1);
            let q = &s.q[c * len..(c + 1) * len];
            out[a * k1 + c] = row[..m].iter().zip(&q[..m]).map(|(x, y)| x * y).sum();
        }
    }
}

/// `T(z^j)` for a single monomial.
pub fn t_monomial(g: &TransitiveGraph, b: &Perturbation, j: usize) -> Result<f64> {
    Ok(TraceEngine::new(g, j).monomials(b)?[j])
}

/// Value of `T(f)` together with the a-priori bound `c1^2 sqrt(n) ||tail||_*`
/// on what truncation of `f` dropped (zero for exact polynomials).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TValue {
    pub t: f64,
    pub tail_bound: f64,
}

pub fn t_function(g: &TransitiveGraph, b: &Perturbation, f: &PowerSeries) -> Result<TValue> {
    TraceEngine::new(g, f.degree()).t_function(b, f)
}

/// The bound `|T(f)| <= c1^2 sqrt(n) ||f||_*`.
pub fn t_bound(b: &Perturbation, f: &PowerSeries) -> f64 {
    b.c1() * b.c1() * (b.n() as f64).sqrt() * f.star_norm()
}

pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Finite-epsilon difference quotient `n^{-1/2} eps^{-2} (Tr f(M + eps B) - Tr f(M))`.
///
/// The difference `(M + eps B)^k - M^k` is propagated directly column by
/// column, so no large traces are subtracted. For series that are not
/// polynomials, summation stops once `n * sum_{k>K} |a_k|` (with
/// `||M + eps B||_inf = 1`) falls below `tolerance`.
pub fn m_eps(
    g: &TransitiveGraph,
    b: &Perturbation,
    f: &PowerSeries,
    eps: f64,
    tolerance: f64,
) -> Result<f64> {
    if b.n() != g.n() || b.d() != g.d() {
        return Err(invalid!("perturbation does not match graph {}", g.label()));
    }
    if !(eps > 0.0 && eps * b.c1() < 1.0) {
        return Err(invalid!(
            "eps must lie in (0, 1/c1) = (0, {}), got {eps}",
            1.0 / b.c1()
        ));
    }
    if f.radius() <= 1.0 {
        return Err(invalid!("series radius {} does not exceed 1", f.radius()));
    }
    let n = g.n();
    let kmax = truncation_degree(f, n, tolerance)?;
    let coeffs = &f.coeffs()[..=kmax];
    let d = g.d();
    let inv_d = 1.0 / d as f64;

    let per_vertex: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut y = vec![0.0; n];
            let mut delta = vec![0.0; n];
            let mut y_next = vec![0.0; n];
            let mut delta_next = vec![0.0; n];
            y[v] = 1.0;
            let mut acc = 0.0;
            for &a in &coeffs[1..] {
                // delta' = (M + eps B) delta + eps B y,  y' = M y
                for u in 0..n {
                    let nb = g.neighbors(u);
                    let row = b.row(u);
                    let (mut my, mut md, mut by, mut bd) = (0.0, 0.0, 0.0, 0.0);
                    for (w, bw) in nb.iter().zip(row) {
                        let w = *w as usize;
                        my += y[w];
                        md += delta[w];
                        by += bw * y[w];
                        bd += bw * delta[w];
                    }
                    y_next[u] = my * inv_d;
                    delta_next[u] = md * inv_d + eps * (bd + by);
                }
                std::mem::swap(&mut y, &mut y_next);
                std::mem::swap(&mut delta, &mut delta_next);
                acc += a * delta[v];
            }
            acc
        })
        .collect();
    let trace_diff = pairwise_sum(&per_vertex);
    Ok(trace_diff / (eps * eps * (n as f64).sqrt()))
}

fn truncation_degree(f: &PowerSeries, n: usize, tolerance: f64) -> Result<usize> {
    let c = f.coeffs();
    let mut tail = f.tail_abs();
    if n as f64 * tail > tolerance {
        return Err(invalid!(
            "series tail {tail:e} is too large for trace tolerance {tolerance:e}; keep more terms"
        ));
    }
    let mut k = c.len() - 1;
    while k > 0 && n as f64 * (tail + c[k].abs()) <= tolerance {
        tail += c[k].abs();
        k -= 1;
    }
    // Exact polynomials are never cut.
    if !f.is_truncated() && f.radius().is_infinite() {
        k = c.len() - 1;
    }
    Ok(k)
}

/// `max_{v, k <= kmax} |(B M^k)_{vv}|`.
pub fn zero_entry_check(g: &TransitiveGraph, b: &Perturbation, kmax: usize) -> Result<f64> {
    if b.n() != g.n() || b.d() != g.d() {
        return Err(invalid!("perturbation does not match graph {}", g.label()));
    }
    let radius = kmax.max(1);
    let worst = (0..g.n())
        .into_par_iter()
        .map(|v| {
            let ball = Ball::new(g, v, radius);
            let len = ball.len();
            let mut row = vec![0.0; len];
            let mut next = vec![0.0; len];
            for (a, &p) in ball.neighbor_positions(0).iter().enumerate() {
                row[p as usize] += b.row(v)[a];
            }
            let mut worst = row[0].abs();
            for k in 1..=kmax {
                ball.step(&row, &mut next, k + 1);
                std::mem::swap(&mut row, &mut next);
                worst = worst.max(row[0].abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}
