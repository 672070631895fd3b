use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// LCF notation `[j_0, ..., j_{m-1}]^e` for a cubic Hamiltonian graph on
/// `m * e` vertices: vertex `i` is joined to `i +- 1` and to `i + j_{i mod m}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcfCode {
    pub jumps: Vec<i64>,
    pub exponent: usize,
    pub declared_vertex_transitive: bool,
}

/// Symmetric cubic graphs shipped with the crate.
pub static LCF_CATALOG: [(&str, LcfCodeRef); 5] = [
    ("heawood", LcfCodeRef { jumps: &[5, -5], exponent: 7 }),
    ("pappus", LcfCodeRef { jumps: &[5, 7, -7, 7, -7, -5], exponent: 3 }),
    ("desargues", LcfCodeRef { jumps: &[5, -5, 9, -9], exponent: 5 }),
    ("tutte-coxeter", LcfCodeRef { jumps: &[-13, -9, 7, -7, 9, 13], exponent: 5 }),
    ("foster", LcfCodeRef { jumps: &[17, -9, 37, -37, 9, -17], exponent: 15 }),
];

/// Static form of a catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct LcfCodeRef {
    pub jumps: &'static [i64],
    pub exponent: usize,
}

impl PartialEq<LcfCode> for LcfCodeRef {
    fn eq(&self, other: &LcfCode) -> bool {
        self.jumps == other.jumps.as_slice() && self.exponent == other.exponent
    }
}

impl LcfCode {
    pub fn new(jumps: Vec<i64>, exponent: usize, declared_vertex_transitive: bool) -> Self {
        LcfCode {
            jumps,
            exponent,
            declared_vertex_transitive,
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase().replace(['_', ' '], "-");
        let key = match key.as_str() {
            "tutte-8-cage" | "tutte8" | "tutte-coxeter" => "tutte-coxeter",
            other => other,
        }
        .to_string();
        LCF_CATALOG
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, c)| LcfCode::new(c.jumps.to_vec(), c.exponent, true))
            .ok_or_else(|| {
                let known: Vec<_> = LCF_CATALOG.iter().map(|(n, _)| *n).collect();
                Error::InvalidArgument(format!(
                    "unknown LCF graph {name:?}; known: {}",
                    known.join(", ")
                ))
            })
    }

    pub fn vertex_count(&self) -> usize {
        self.jumps.len() * self.exponent
    }

    /// Neighbor table in slot order (predecessor, successor, chord).
    pub(crate) fn adjacency(&self) -> Result<Vec<u32>> {
        let n = self.vertex_count();
        if self.jumps.is_empty() || n < 4 {
            return Err(Error::InvalidCode(format!(
                "{self} describes only {n} vertices"
            )));
        }
        let n_i = n as i64;
        let target = |i: usize| (i as i64 + self.jumps[i % self.jumps.len()]).rem_euclid(n_i) as usize;
        let mut adjacency = Vec::with_capacity(3 * n);
        for i in 0..n {
            let j = target(i);
            let offset = (j + n - i) % n;
            if offset == 0 {
                return Err(Error::InvalidCode(format!("self-loop at vertex {i}")));
            }
            if offset == 1 || offset == n - 1 {
                return Err(Error::InvalidCode(format!(
                    "chord at vertex {i} duplicates a cycle edge"
                )));
            }
            if target(j) != i {
                return Err(Error::InvalidCode(format!(
                    "chord collision: {i} -> {j} but {j} -> {}",
                    target(j)
                )));
            }
            adjacency.extend([((i + n - 1) % n) as u32, ((i + 1) % n) as u32, j as u32]);
        }
        Ok(adjacency)
    }
}

impl fmt::Display for LcfCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let jumps: Vec<String> = self.jumps.iter().map(i64::to_string).collect();
        write!(f, "[{}]^{}", jumps.join(","), self.exponent)
    }
}

impl std::str::FromStr for LcfCode {
    type Err = Error;

    /// Parses `[5,-5]^7` (the exponent defaults to 1). Parsed codes are not
    /// declared vertex-transitive.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidCode(format!("cannot parse LCF code {s:?}"));
        let s = s.trim();
        let (body, exponent) = match s.rsplit_once('^') {
            Some((b, e)) => (b, e.trim().parse().map_err(|_| bad())?),
            None => (s, 1),
        };
        let body = body
            .trim()
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .ok_or_else(bad)?;
        let jumps = body
            .split(',')
            .map(|t| t.trim().parse::<i64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        Ok(LcfCode::new(jumps, exponent, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::TransitiveGraph;

    #[test]
    fn catalog_sizes() {
        let sizes: Vec<_> = LCF_CATALOG
            .iter()
            .map(|(name, _)| LcfCode::named(name).unwrap().vertex_count())
            .collect();
        assert_eq!(sizes, vec![14, 18, 20, 30, 90]);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let code: LcfCode = "[5,-5]^7".parse().unwrap();
        assert_eq!(code.to_string(), "[5,-5]^7");
        assert!(!code.declared_vertex_transitive);
        assert!("5,-5".parse::<LcfCode>().is_err());
    }

    #[test]
    fn collisions_and_loops_are_rejected() {
        // 0 -> 2 but 2 -> 4.
        let code = LcfCode::new(vec![2], 8, true);
        assert!(matches!(code.adjacency(), Err(Error::InvalidCode(_))));
        let code = LcfCode::new(vec![0], 6, true);
        assert!(matches!(code.adjacency(), Err(Error::InvalidCode(_))));
        let code = LcfCode::new(vec![1, -1], 3, true);
        assert!(matches!(code.adjacency(), Err(Error::InvalidCode(_))));
    }

    #[test]
    fn undeclared_codes_are_refused() {
        let code: LcfCode = "[5,-5]^7".parse().unwrap();
        assert!(TransitiveGraph::lcf(&code).is_err());
        let declared = LcfCode { declared_vertex_transitive: true, ..code };
        assert_eq!(TransitiveGraph::lcf(&declared).unwrap().label(), "lcf name=heawood");
    }
}
