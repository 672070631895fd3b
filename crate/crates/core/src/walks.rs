//! Walk operators on regular graphs.
//!
//! Everything here works through the [`WalkGraph`] trait so the same code runs
//! on finite transitive graphs and on depth-truncated regular trees. The
//! transition operator is `M[u][v] = 1/d` for every edge `u ~ v`, where `d` is
//! the nominal degree; on a truncated tree the boundary rows are therefore
//! substochastic, which is harmless as long as walks never reach the boundary.

use std::ops::{AddAssign, Mul};

/// Sentinel for "neighbor lies outside the local ball".
pub const OUTSIDE: u32 = u32::MAX;

pub trait WalkGraph: Sync {
    fn vertex_count(&self) -> usize;

    /// Nominal degree `d`; `M` has entries `1/d` on edges.
    fn degree(&self) -> usize;

    /// Neighbors of `u` in slot order. May be shorter than `degree()` on the
    /// boundary of a truncated graph.
    fn neighbors(&self, u: usize) -> &[u32];
}

/// `out = M x`.
pub fn apply_transition<G, T>(g: &G, x: &[T], out: &mut [T])
where
    G: WalkGraph + ?Sized,
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let inv_d = 1.0 / g.degree() as f64;
    for (u, slot) in out.iter_mut().enumerate() {
        let mut acc = T::default();
        for &v in g.neighbors(u) {
            acc += x[v as usize];
        }
        *slot = acc * inv_d;
    }
}

/// Columns `M^k e_v` for `k = 0..=kmax`, as dense vectors.
pub fn walk_columns<G: WalkGraph + ?Sized>(g: &G, v: usize, kmax: usize) -> Vec<Vec<f64>> {
    let n = g.vertex_count();
    let mut cols = Vec::with_capacity(kmax + 1);
    let mut e = vec![0.0; n];
    e[v] = 1.0;
    cols.push(e);
    for k in 1..=kmax {
        let mut next = vec![0.0; n];
        apply_transition(g, &cols[k - 1], &mut next);
        cols.push(next);
    }
    cols
}

/// Breadth-first distances from `v`, `usize::MAX` where unreachable or
/// beyond `radius`.
pub fn bfs_distances<G: WalkGraph + ?Sized>(g: &G, v: usize, radius: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; g.vertex_count()];
    dist[v] = 0;
    let mut queue = std::collections::VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        if dist[u] == radius {
            continue;
        }
        for &w in g.neighbors(u) {
            let w = w as usize;
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// A radius-`r` ball around a center vertex with positions in BFS order and
/// neighbor slots translated into ball positions.
#[derive(Debug, Clone)]
pub struct Ball {
    /// Global ids, position 0 is the center.
    pub vertices: Vec<u32>,
    /// `layer_end[r]` is one past the last position at distance `<= r`.
    pub layer_end: Vec<usize>,
    /// Row-major `vertices.len() x degree`, `OUTSIDE` for neighbors that are
    /// not in the ball or for missing slots.
    pub neighbor_pos: Vec<u32>,
    degree: usize,
}

impl Ball {
    pub fn new<G: WalkGraph + ?Sized>(g: &G, center: usize, radius: usize) -> Self {
        let mut positions = Scratch::new(g.vertex_count());
        Self::build(g, center, radius, &mut positions)
    }

    fn build<G: WalkGraph + ?Sized>(
        g: &G,
        center: usize,
        radius: usize,
        positions: &mut Scratch,
    ) -> Self {
        positions.clear();
        let d = g.degree();
        let mut vertices = vec![center as u32];
        positions.insert(center as u32, 0);
        let mut layer_end = vec![1];
        let mut start = 0;
        for _ in 0..radius {
            let end = vertices.len();
            for p in start..end {
                let u = vertices[p] as usize;
                for &w in g.neighbors(u) {
                    if positions.get(w).is_none() {
                        positions.insert(w, vertices.len() as u32);
                        vertices.push(w);
                    }
                }
            }
            start = end;
            layer_end.push(vertices.len());
        }
        let mut neighbor_pos = vec![OUTSIDE; vertices.len() * d];
        for (p, &u) in vertices.iter().enumerate() {
            for (a, &w) in g.neighbors(u as usize).iter().enumerate() {
                if let Some(q) = positions.get(w) {
                    neighbor_pos[p * d + a] = q;
                }
            }
        }
        Ball {
            vertices,
            layer_end,
            neighbor_pos,
            degree: d,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.layer_end.len() - 1
    }

    /// Number of positions at distance `<= r` from the center.
    pub fn within(&self, r: usize) -> usize {
        self.layer_end[r.min(self.radius())]
    }

    #[inline]
    pub fn neighbor_positions(&self, p: usize) -> &[u32] {
        &self.neighbor_pos[p * self.degree..(p + 1) * self.degree]
    }

    /// One step of `x -> x M` (equivalently `M x`, since `M` is symmetric)
    /// restricted to positions at distance `<= reach`. Contributions from
    /// outside the ball are taken as zero.
    pub fn step(&self, x: &[f64], out: &mut [f64], reach: usize) {
        let inv_d = 1.0 / self.degree as f64;
        let m = self.within(reach);
        for p in 0..m {
            let mut acc = 0.0;
            for &q in self.neighbor_positions(p) {
                if q != OUTSIDE {
                    acc += x[q as usize];
                }
            }
            out[p] = acc * inv_d;
        }
        for o in out[m..].iter_mut() {
            *o = 0.0;
        }
    }
}

/// Vertex-to-position map that is cheap to reset between balls.
struct Scratch {
    pos_of: Vec<u32>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            pos_of: vec![OUTSIDE; n],
            touched: Vec::new(),
        }
    }

    fn clear(&mut self) {
        for &w in &self.touched {
            self.pos_of[w as usize] = OUTSIDE;
        }
        self.touched.clear();
    }

    #[inline]
    fn get(&self, w: u32) -> Option<u32> {
        let p = self.pos_of[w as usize];
        (p != OUTSIDE).then_some(p)
    }

    fn insert(&mut self, w: u32, p: u32) {
        self.pos_of[w as usize] = p;
        self.touched.push(w);
    }
}

/// Balls of a common radius around every vertex, built once per graph.
#[derive(Debug, Clone)]
pub struct LocalBalls {
    radius: usize,
    balls: Vec<Ball>,
}

impl LocalBalls {
    pub fn new<G: WalkGraph + ?Sized>(g: &G, radius: usize) -> Self {
        let mut positions = Scratch::new(g.vertex_count());
        let balls = (0..g.vertex_count())
            .map(|v| Ball::build(g, v, radius, &mut positions))
            .collect();
        LocalBalls { radius, balls }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn ball(&self, v: usize) -> &Ball {
        &self.balls[v]
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}

/// Sum in a fixed pairwise order so reductions do not depend on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Path4;
    impl WalkGraph for Path4 {
        fn vertex_count(&self) -> usize {
            4
        }
        fn degree(&self) -> usize {
            2
        }
        fn neighbors(&self, u: usize) -> &[u32] {
            const ADJ: [&[u32]; 4] = [&[1], &[0, 2], &[1, 3], &[2]];
            ADJ[u]
        }
    }

    #[test]
    fn ball_layers_on_a_path() {
        let b = Ball::new(&Path4, 0, 2);
        assert_eq!(b.vertices, vec![0, 1, 2]);
        assert_eq!(b.layer_end, vec![1, 2, 3]);
        assert_eq!(b.neighbor_positions(2), &[1, OUTSIDE]);
    }

    #[test]
    fn local_balls_match_single_balls() {
        let lb = LocalBalls::new(&Path4, 1);
        for v in 0..4 {
            assert_eq!(lb.ball(v).vertices, Ball::new(&Path4, v, 1).vertices);
        }
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
