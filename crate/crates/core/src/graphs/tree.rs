use crate::error::{invalid, Result};
use crate::walks::WalkGraph;

/// The `d`-regular tree cut off at distance `depth` from the root (vertex 0).
///
/// Vertices at the cut keep only their parent, so `M` is substochastic there;
/// quantities that only involve walks staying strictly inside the cut agree
/// exactly with the infinite tree.
#[derive(Debug, Clone)]
pub struct TruncatedTree {
    d: usize,
    depth: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    depth_of: Vec<u32>,
}

impl TruncatedTree {
    pub fn new(d: usize, depth: usize) -> Result<Self> {
        if d < 2 {
            return Err(invalid!("tree degree must be at least 2, got {d}"));
        }
        let size: usize = (0..=depth).map(|r| layer_size(d, r)).sum();
        if size > 50_000_000 {
            return Err(invalid!("a depth-{depth} {d}-regular tree has {size} vertices"));
        }
        let mut parent = vec![u32::MAX];
        let mut depth_of = vec![0u32];
        let mut children: Vec<Vec<u32>> = vec![Vec::new()];
        let mut frontier = vec![0u32];
        for r in 1..=depth {
            let mut next = Vec::with_capacity(layer_size(d, r));
            for &u in &frontier {
                let k = if u == 0 { d } else { d - 1 };
                for _ in 0..k {
                    let id = parent.len() as u32;
                    parent.push(u);
                    depth_of.push(r as u32);
                    children.push(Vec::new());
                    children[u as usize].push(id);
                    next.push(id);
                }
            }
            frontier = next;
        }
        let mut offsets = Vec::with_capacity(parent.len() + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for (u, kids) in children.iter().enumerate() {
            if parent[u] != u32::MAX {
                neighbors.push(parent[u]);
            }
            neighbors.extend_from_slice(kids);
            offsets.push(neighbors.len());
        }
        Ok(TruncatedTree {
            d,
            depth,
            offsets,
            neighbors,
            depth_of,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Distance from the root.
    pub fn level(&self, u: usize) -> usize {
        self.depth_of[u] as usize
    }
}

fn layer_size(d: usize, r: usize) -> usize {
    if r == 0 {
        1
    } else {
        d.saturating_mul((d - 1).saturating_pow(r as u32 - 1))
    }
}

impl WalkGraph for TruncatedTree {
    fn vertex_count(&self) -> usize {
        self.depth_of.len()
    }

    fn degree(&self) -> usize {
        self.d
    }

    #[inline]
    fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }
}
