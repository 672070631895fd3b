//! Finite vertex-transitive regular graphs.
//!
//! Three construction families are supported: cycles (`d = 2`), cubic graphs
//! from LCF notation (`d = 3`, transitive by catalog declaration) and Cayley
//! graphs of 2x2 matrix groups over a prime field. Vertex transitivity is a
//! property of the family, never checked by an automorphism search.
//!
//! Neighbor slot order is fixed at construction and is the indexing contract
//! used by the environment samplers.

mod cayley;
mod lcf;
mod spec;
mod tree;

pub use cayley::{standard_generators, Mat2};
pub use lcf::{LcfCode, LCF_CATALOG};
pub use spec::GraphSpec;
pub use tree::TruncatedTree;

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::walks::{apply_transition, bfs_distances, walk_columns, WalkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    Cycle,
    Lcf,
    Cayley,
}

/// An immutable `d`-regular, connected, vertex-transitive graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitiveGraph {
    n: usize,
    d: usize,
    /// Row-major `n x d` neighbor table.
    adjacency: Vec<u32>,
    girth: usize,
    family: FamilyTag,
    label: String,
}

impl TransitiveGraph {
    /// Cycle `C_n`; slot 0 is the predecessor, slot 1 the successor.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid!("a cycle needs at least 3 vertices, got {n}"));
        }
        let mut adjacency = Vec::with_capacity(2 * n);
        for u in 0..n {
            adjacency.push(((u + n - 1) % n) as u32);
            adjacency.push(((u + 1) % n) as u32);
        }
        Self::from_adjacency(n, 2, adjacency, FamilyTag::Cycle, format!("cycle n={n}"))
    }

    /// Cubic graph from an LCF code: Hamiltonian cycle plus one chord per
    /// vertex. Slots are (predecessor, successor, chord).
    pub fn lcf(code: &LcfCode) -> Result<Self> {
        if !code.declared_vertex_transitive {
            return Err(invalid!(
                "LCF code {code} is not declared vertex-transitive"
            ));
        }
        let adjacency = code.adjacency()?;
        let label = match LCF_CATALOG.iter().find(|(_, c)| c == code) {
            Some((name, _)) => format!("lcf name={name}"),
            None => format!("lcf code={code}"),
        };
        Self::from_adjacency(code.vertex_count(), 3, adjacency, FamilyTag::Lcf, label)
    }

    /// Catalog LCF graph by name (`heawood`, `pappus`, `desargues`,
    /// `tutte-coxeter`, `foster`).
    pub fn lcf_named(name: &str) -> Result<Self> {
        Self::lcf(&LcfCode::named(name)?)
    }

    /// Right Cayley graph `g ~ g s` of the group generated by `generators`
    /// modulo the prime `p`. Vertex 0 is the identity and slot `a` is
    /// multiplication by `generators[a]`.
    pub fn cayley(p: u32, generators: &[Mat2]) -> Result<Self> {
        let (n, adjacency) = cayley::enumerate(p, generators)?;
        let label = format!("cayley p={p} gens={}", cayley::describe(generators));
        Self::from_adjacency(n, generators.len(), adjacency, FamilyTag::Cayley, label)
    }

    fn from_adjacency(
        n: usize,
        d: usize,
        adjacency: Vec<u32>,
        family: FamilyTag,
        label: String,
    ) -> Result<Self> {
        if d < 2 {
            return Err(invalid!("degree must be at least 2, got {d}"));
        }
        debug_assert_eq!(adjacency.len(), n * d);
        let mut g = TransitiveGraph {
            n,
            d,
            adjacency,
            girth: 0,
            family,
            label,
        };
        g.validate()?;
        g.girth = girth(&g)
            .ok_or_else(|| invalid!("graph {} has no cycle", g.label))?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        for u in 0..self.n {
            let nb = self.neighbors(u);
            for (a, &v) in nb.iter().enumerate() {
                if v as usize == u {
                    return Err(invalid!("self-loop at vertex {u}"));
                }
                if nb[..a].contains(&v) {
                    return Err(invalid!("repeated neighbor {v} at vertex {u}"));
                }
                if !self.neighbors(v as usize).contains(&(u as u32)) {
                    return Err(invalid!("edge {u} -> {v} is not symmetric"));
                }
            }
        }
        let dist = bfs_distances(self, 0, usize::MAX);
        if dist.iter().any(|&x| x == usize::MAX) {
            return Err(invalid!("graph {} is not connected", self.label));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn girth(&self) -> usize {
        self.girth
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    /// Human-readable description that parses back through [`GraphSpec`].
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn adjacency(&self) -> &[u32] {
        &self.adjacency
    }

    /// Slot of `v` in the neighbor list of `u`.
    pub fn slot_of(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u).iter().position(|&w| w as usize == v)
    }

    /// `M x` for a real or complex vector.
    pub fn apply_m<T>(&self, x: &[T]) -> Result<Vec<T>>
    where
        T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        if x.len() != self.n {
            return Err(invalid!(
                "vector has length {}, graph has {} vertices",
                x.len(),
                self.n
            ));
        }
        let mut out = vec![T::default(); self.n];
        apply_transition(self, x, &mut out);
        Ok(out)
    }

    /// `M^k e_v` computed by `k` applications of `M`.
    pub fn walk_matrix_column(&self, v: usize, k: usize) -> Result<Vec<f64>> {
        if v >= self.n {
            return Err(invalid!("vertex {v} out of range 0..{}", self.n));
        }
        Ok(walk_columns(self, v, k).pop().expect("k + 1 columns"))
    }

    /// Vertices within distance `r` of `v`, in breadth-first order.
    pub fn ball(&self, v: usize, r: usize) -> Vec<usize> {
        crate::walks::Ball::new(self, v, r)
            .vertices
            .into_iter()
            .map(|w| w as usize)
            .collect()
    }

    pub fn is_bipartite(&self) -> bool {
        let mut side = vec![u8::MAX; self.n];
        side[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                let w = w as usize;
                if side[w] == u8::MAX {
                    side[w] = 1 - side[u];
                    queue.push_back(w);
                } else if side[w] == side[u] {
                    return false;
                }
            }
        }
        true
    }
}

impl WalkGraph for TransitiveGraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.d
    }

    #[inline]
    fn neighbors(&self, u: usize) -> &[u32] {
        &self.adjacency[u * self.d..(u + 1) * self.d]
    }
}

/// Shortest cycle length by breadth-first search from every vertex, `None`
/// for a forest.
pub fn girth<G: WalkGraph + ?Sized>(g: &G) -> Option<usize> {
    let n = g.vertex_count();
    let mut best = usize::MAX;
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut seen = Vec::new();
    for root in 0..n {
        for &v in &seen {
            dist[v] = usize::MAX;
            parent[v] = usize::MAX;
        }
        seen.clear();
        dist[root] = 0;
        seen.push(root);
        queue.clear();
        queue.push_back(root);
        'bfs: while let Some(u) = queue.pop_front() {
            // No shorter cycle can be closed from deeper layers.
            if 2 * dist[u] + 1 >= best {
                break;
            }
            for &w in g.neighbors(u) {
                let w = w as usize;
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    seen.push(w);
                    queue.push_back(w);
                } else if parent[u] != w {
                    best = best.min(dist[u] + dist[w] + 1);
                    if best == 3 {
                        break 'bfs;
                    }
                }
            }
        }
    }
    (best != usize::MAX).then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn cycle_slots_are_predecessor_then_successor() {
        let g = TransitiveGraph::cycle(5).unwrap();
        assert_eq!(g.neighbors(0), &[4, 1]);
        assert_eq!(g.neighbors(3), &[2, 4]);
        assert_eq!(g.girth(), 5);
    }

    #[test]
    fn cycle_rejects_small_n() {
        assert!(matches!(
            TransitiveGraph::cycle(2),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cycle_girth_is_n() {
        for n in 3..=50 {
            assert_eq!(TransitiveGraph::cycle(n).unwrap().girth(), n);
        }
    }

    #[test]
    fn apply_m_on_c4() {
        let g = TransitiveGraph::cycle(4).unwrap();
        let y = g.apply_m(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.5, 0.0, 0.5]);
        assert!(g.apply_m(&[1.0; 3]).is_err());
    }

    #[test]
    fn apply_m_preserves_constants_for_complex_input() {
        let g = TransitiveGraph::lcf_named("heawood").unwrap();
        let x = vec![num_complex::Complex64::new(0.3, -2.0); g.n()];
        for (y, x) in g.apply_m(&x).unwrap().iter().zip(&x) {
            assert!((y - x).norm() < 1e-15);
        }
    }

    #[test]
    fn walk_column_on_c6() {
        let g = TransitiveGraph::cycle(6).unwrap();
        assert_eq!(
            g.walk_matrix_column(0, 2).unwrap(),
            vec![0.5, 0.0, 0.25, 0.0, 0.25, 0.0]
        );
        assert_eq!(
            g.walk_matrix_column(3, 0).unwrap(),
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn bipartite_detection() {
        assert!(TransitiveGraph::cycle(6).unwrap().is_bipartite());
        assert!(!TransitiveGraph::cycle(7).unwrap().is_bipartite());
    }

    #[test]
    fn ball_sizes_on_foster() {
        let g = TransitiveGraph::lcf_named("foster").unwrap();
        // Tree-like up to radius 4 because the girth is 10.
        assert_eq!(g.ball(0, 4).len(), 1 + 3 + 6 + 12 + 24);
    }
}
