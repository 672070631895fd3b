use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A 2x2 matrix `[[a, b], [c, d]]` with entries reduced modulo some prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    pub fn reduce(self, p: i64) -> Self {
        Mat2::new(
            self.a.rem_euclid(p),
            self.b.rem_euclid(p),
            self.c.rem_euclid(p),
            self.d.rem_euclid(p),
        )
    }

    pub fn mul(self, o: Mat2, p: i64) -> Self {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
        .reduce(p)
    }

    pub fn det(self, p: i64) -> i64 {
        (self.a * self.d - self.b * self.c).rem_euclid(p)
    }

    pub fn inverse(self, p: i64) -> Option<Self> {
        let det = self.det(p);
        if det == 0 {
            return None;
        }
        let inv = mod_pow(det, p - 2, p);
        Some(Mat2::new(self.d * inv, -self.b * inv, -self.c * inv, self.a * inv).reduce(p))
    }

    fn code(self, p: i64) -> u64 {
        let p = p as u64;
        ((self.a as u64 * p + self.b as u64) * p + self.c as u64) * p + self.d as u64
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.a, self.b, self.c, self.d)
    }
}

fn mod_pow(mut base: i64, mut exp: i64, p: i64) -> i64 {
    let mut acc = 1;
    base = base.rem_euclid(p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|q| q * q <= p).all(|q| p % q != 0)
}

/// `A, A^-1, B, B^-1` with `A = [[1,2],[0,1]]`, `B = [[1,0],[2,1]]`; they
/// generate `SL(2, p)` for odd primes `p`.
pub fn standard_generators(p: u32) -> Vec<Mat2> {
    let p = p as i64;
    let a = Mat2::new(1, 2, 0, 1).reduce(p);
    let b = Mat2::new(1, 0, 2, 1).reduce(p);
    vec![
        a,
        a.inverse(p).expect("unimodular"),
        b,
        b.inverse(p).expect("unimodular"),
    ]
}

pub(crate) fn describe(generators: &[Mat2]) -> String {
    generators
        .iter()
        .map(Mat2::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// Breadth-first enumeration of the generated group; returns the vertex
/// count and the neighbor table `g -> g * s_a`.
pub(crate) fn enumerate(p: u32, generators: &[Mat2]) -> Result<(usize, Vec<u32>)> {
    if !is_prime(p) {
        return Err(invalid!("modulus {p} is not prime"));
    }
    let pi = p as i64;
    let gens: Vec<Mat2> = generators.iter().map(|g| g.reduce(pi)).collect();
    if gens.len() < 2 {
        return Err(invalid!("need at least two generators, got {}", gens.len()));
    }
    for (i, g) in gens.iter().enumerate() {
        let inv = g
            .inverse(pi)
            .ok_or_else(|| invalid!("generator {g} is not invertible mod {p}"))?;
        if *g == Mat2::identity() {
            return Err(invalid!("identity is not allowed as a generator"));
        }
        if gens[..i].contains(g) {
            return Err(invalid!("generator {g} is repeated"));
        }
        if !gens.contains(&inv) {
            return Err(invalid!(
                "generator set is not closed under inverses: {g} lacks {inv}"
            ));
        }
    }

    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut elements = vec![Mat2::identity()];
    index.insert(Mat2::identity().code(pi), 0);
    let mut adjacency: Vec<u32> = Vec::new();
    let mut next = 0;
    while next < elements.len() {
        let g = elements[next];
        for s in &gens {
            let h = g.mul(*s, pi);
            let id = *index.entry(h.code(pi)).or_insert_with(|| {
                elements.push(h);
                (elements.len() - 1) as u32
            });
            adjacency.push(id);
        }
        next += 1;
    }
    Ok((elements.len(), adjacency))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent order of SL(2, p): count determinant-one matrices.
    fn sl2_order_by_counting(p: i64) -> usize {
        let mut count = 0;
        for a in 0..p {
            for b in 0..p {
                for c in 0..p {
                    for d in 0..p {
                        if (a * d - b * c).rem_euclid(p) == 1 {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn inverse_round_trip() {
        let p = 13;
        let m = Mat2::new(3, 5, 7, 2);
        let inv = m.inverse(p).unwrap();
        assert_eq!(m.mul(inv, p), Mat2::identity());
        assert!(Mat2::new(2, 4, 1, 2).inverse(p).is_none());
    }

    #[test]
    fn standard_generators_fill_sl2() {
        for p in [3u32, 5, 7] {
            let (n, _) = enumerate(p, &standard_generators(p)).unwrap();
            assert_eq!(n, sl2_order_by_counting(p as i64), "p = {p}");
        }
    }

    #[test]
    fn rejects_bad_generator_sets() {
        let p = 5;
        let sg = standard_generators(p);
        assert!(enumerate(p, &sg[..3]).is_err());
        assert!(enumerate(6, &sg).is_err());
        let singular = vec![Mat2::new(1, 1, 1, 1), Mat2::new(1, 1, 1, 1)];
        assert!(enumerate(p, &singular).is_err());
        let with_identity = vec![Mat2::identity(), sg[0], sg[1]];
        assert!(enumerate(p, &with_identity).is_err());
    }
}
