//! Random environments: admissible perturbations `B` of the walk.
//!
//! Every sampler draws i.i.d. rows that are exchangeable across neighbor
//! slots, have zero sum, zero mean and unit variance per slot, and are bounded
//! by `c1 / d`. Exchangeability fixes the row covariance exactly:
//! `C[a][a] = 1` and `C[a][b] = -1/(d-1)` for `a != b`.
//!
//! Rows are drawn from counter-based ChaCha streams keyed by `(seed, vertex)`,
//! so a perturbation does not depend on the order in which rows are filled.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graphs::TransitiveGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    /// `(s, -s)` with a uniform sign `s`; degree 2 only.
    #[serde(alias = "antisym")]
    AntisymmetricPair,
    /// A uniformly random arrangement of `d/2` entries `+1` and `d/2` entries `-1`.
    #[serde(alias = "balanced")]
    BalancedSigns,
    /// A uniformly random permutation of a fixed base vector.
    #[serde(alias = "permvec")]
    PermutedVector,
}

impl SamplerKind {
    pub fn short_name(self) -> &'static str {
        match self {
            SamplerKind::AntisymmetricPair => "antisym",
            SamplerKind::BalancedSigns => "balanced",
            SamplerKind::PermutedVector => "permvec",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "antisym" | "antisymmetric-pair" => Ok(SamplerKind::AntisymmetricPair),
            "balanced" | "balanced-signs" => Ok(SamplerKind::BalancedSigns),
            "permvec" | "permuted-vector" => Ok(SamplerKind::PermutedVector),
            other => Err(invalid!(
                "unknown sampler {other:?} (expected antisym, balanced or permvec)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSampler {
    kind: SamplerKind,
    d: usize,
    base_vector: Vec<f64>,
    c1: f64,
    /// Row-major `d x d`.
    row_cov: Vec<f64>,
}

const BASE_TOLERANCE: f64 = 1e-9;

impl EnvironmentSampler {
    /// Builds a sampler; `base` is only consulted for
    /// [`SamplerKind::PermutedVector`], where `None` selects
    /// [`default_base_vector`].
    pub fn new(kind: SamplerKind, d: usize, base: Option<&[f64]>) -> Result<Self> {
        let base_vector = match kind {
            SamplerKind::AntisymmetricPair => {
                if d != 2 {
                    return Err(invalid!("antisymmetric-pair needs d = 2, got {d}"));
                }
                vec![1.0, -1.0]
            }
            SamplerKind::BalancedSigns => {
                if d < 2 || d % 2 != 0 {
                    return Err(invalid!("balanced-signs needs an even d >= 2, got {d}"));
                }
                (0..d).map(|a| if a < d / 2 { 1.0 } else { -1.0 }).collect()
            }
            SamplerKind::PermutedVector => {
                if d < 2 {
                    return Err(invalid!("permuted-vector needs d >= 2, got {d}"));
                }
                let base = match base {
                    Some(b) => b.to_vec(),
                    None => default_base_vector(d),
                };
                if base.len() != d {
                    return Err(invalid!(
                        "base vector has length {}, expected d = {d}",
                        base.len()
                    ));
                }
                let sum: f64 = base.iter().sum();
                let sq: f64 = base.iter().map(|x| x * x).sum();
                if sum.abs() > BASE_TOLERANCE * d as f64 {
                    return Err(invalid!("base vector must sum to zero, sums to {sum}"));
                }
                if (sq - d as f64).abs() > BASE_TOLERANCE * d as f64 {
                    return Err(invalid!(
                        "base vector must have squared norm d = {d}, has {sq}"
                    ));
                }
                base
            }
        };
        let max_abs = base_vector.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let c1 = d as f64 * max_abs;
        let off = -1.0 / (d as f64 - 1.0);
        let row_cov = (0..d * d)
            .map(|i| if i / d == i % d { 1.0 } else { off })
            .collect();
        Ok(EnvironmentSampler {
            kind,
            d,
            base_vector,
            c1,
            row_cov,
        })
    }

    pub fn antisymmetric_pair() -> Self {
        Self::new(SamplerKind::AntisymmetricPair, 2, None).expect("d = 2")
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn base_vector(&self) -> &[f64] {
        &self.base_vector
    }

    /// `C[a][b] = E[B(u, slot a) B(u, slot b)]`, row-major.
    pub fn row_covariance(&self) -> &[f64] {
        &self.row_cov
    }

    pub fn cov(&self, a: usize, b: usize) -> f64 {
        self.row_cov[a * self.d + b]
    }

    /// Draws one row into `out` (length `d`).
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.kind {
            SamplerKind::AntisymmetricPair => {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                out[0] = s;
                out[1] = -s;
            }
            SamplerKind::BalancedSigns | SamplerKind::PermutedVector => {
                out.copy_from_slice(&self.base_vector);
                out.shuffle(rng);
            }
        }
    }

    /// All rows a realization can take, with equal probability. Used by
    /// exact enumeration checks.
    pub fn support(&self) -> Vec<Vec<f64>> {
        match self.kind {
            SamplerKind::AntisymmetricPair => vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
            _ => permutations(&self.base_vector),
        }
    }

    pub fn sample(&self, g: &TransitiveGraph, seed: u64) -> Result<Perturbation> {
        Perturbation::sample(self, g, seed)
    }
}

impl fmt::Display for EnvironmentSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} d={}", self.kind, self.d)?;
        if self.kind == SamplerKind::PermutedVector && self.base_vector != default_base_vector(self.d) {
            let b: Vec<String> = self.base_vector.iter().map(f64::to_string).collect();
            write!(f, " base={}", b.join(","))?;
        }
        Ok(())
    }
}

/// Evenly spaced values symmetric about zero, scaled to squared norm `d`.
/// For `d = 3` this is `(-sqrt(1.5), 0, sqrt(1.5))`.
pub fn default_base_vector(d: usize) -> Vec<f64> {
    let mid = (d as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..d).map(|i| i as f64 - mid).collect();
    let norm2: f64 = raw.iter().map(|x| x * x).sum();
    let scale = (d as f64 / norm2).sqrt();
    raw.into_iter().map(|x| x * scale).collect()
}

fn permutations(v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Per-vertex random stream for a given seed.
pub fn vertex_rng(seed: u64, vertex: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(vertex as u64);
    rng
}

/// Seed for sample `index` of a campaign with the given master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One realization of `B`, stored per vertex in neighbor-slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    n: usize,
    d: usize,
    c1: f64,
    graph_label: String,
    entries: Vec<f64>,
    seed: u64,
}

impl Perturbation {
    pub fn sample(s: &EnvironmentSampler, g: &TransitiveGraph, seed: u64) -> Result<Self> {
        if s.d() != g.d() {
            return Err(invalid!(
                "sampler has degree {}, graph {} has degree {}",
                s.d(),
                g.label(),
                g.d()
            ));
        }
        let d = g.d();
        let mut entries = vec![0.0; g.n() * d];
        let fill = |(u, row): (usize, &mut [f64])| {
            let mut rng = vertex_rng(seed, u);
            s.sample_row(&mut rng, row);
        };
        if g.n() >= 4096 {
            entries.par_chunks_mut(d).enumerate().for_each(fill);
        } else {
            entries.chunks_mut(d).enumerate().for_each(fill);
        }
        Ok(Perturbation {
            n: g.n(),
            d,
            c1: s.c1(),
            graph_label: g.label().to_string(),
            entries,
            seed,
        })
    }

    /// Builds a perturbation from explicit rows, checking zero row sums and
    /// the `c1 / d` bound.
    pub fn from_rows(g: &TransitiveGraph, c1: f64, entries: Vec<f64>) -> Result<Self> {
        let d = g.d();
        if entries.len() != g.n() * d {
            return Err(invalid!(
                "expected {} entries, got {}",
                g.n() * d,
                entries.len()
            ));
        }
        for (u, row) in entries.chunks(d).enumerate() {
            let sum: f64 = row.iter().sum();
            if sum.abs() > 1e-12 {
                return Err(invalid!("row {u} sums to {sum}, not zero"));
            }
            if row.iter().any(|x| x.abs() * d as f64 > c1 * (1.0 + 1e-12)) {
                return Err(invalid!("row {u} exceeds the bound c1/d = {}", c1 / d as f64));
            }
        }
        Ok(Perturbation {
            n: g.n(),
            d,
            c1,
            graph_label: g.label().to_string(),
            entries,
            seed: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn graph_label(&self) -> &str {
        &self.graph_label
    }

    /// `B(u, neighbor in slot a)` for all slots `a`.
    #[inline]
    pub fn row(&self, u: usize) -> &[f64] {
        &self.entries[u * self.d..(u + 1) * self.d]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Audit dump: header `vertex,slot,value`, one line per entry.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "vertex,slot,value")?;
        for u in 0..self.n {
            for (a, x) in self.row(u).iter().enumerate() {
                writeln!(w, "{u},{a},{x:.16e}")?;
            }
        }
        Ok(())
    }
}
