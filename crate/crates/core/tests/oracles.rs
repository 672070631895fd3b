//! Independent oracles for graphs, monomial functionals and alpha tables.

use girthlab::covariance::{required_depth, tree_alpha, AlphaTable};
use girthlab::environment::{EnvironmentSampler, SamplerKind};
use girthlab::functionals::{t_monomial, TraceEngine};
use girthlab::graphs::standard_generators;
use girthlab::{Perturbation, PowerSeries, TransitiveGraph};
use nalgebra::DMatrix;

fn neighbors(g: &TransitiveGraph, u: usize) -> &[u32] {
    &g.adjacency()[u * g.d()..(u + 1) * g.d()]
}

/// Shortest simple cycle through vertex 0 by depth-first search over simple
/// paths. Equals the girth for vertex-transitive graphs.
fn dfs_girth(g: &TransitiveGraph, limit: usize) -> Option<usize> {
    fn go(g: &TransitiveGraph, path: &mut Vec<usize>, limit: usize, best: &mut usize) {
        let u = *path.last().unwrap();
        for &w in neighbors(g, u) {
            let w = w as usize;
            if w == 0 && path.len() >= 3 {
                *best = (*best).min(path.len());
            } else if !path.contains(&w) && path.len() + 1 < (*best).min(limit + 1) {
                path.push(w);
                go(g, path, limit, best);
                path.pop();
            }
        }
    }
    let mut best = usize::MAX;
    go(g, &mut vec![0], limit, &mut best);
    (best != usize::MAX).then_some(best)
}

fn dense_walk(g: &TransitiveGraph, b: &Perturbation) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    let mut bm = DMatrix::zeros(n, n);
    for u in 0..n {
        for (a, &w) in neighbors(g, u).iter().enumerate() {
            m[(u, w as usize)] += 1.0 / g.d() as f64;
            bm[(u, w as usize)] += b.row(u)[a];
        }
    }
    (m, bm)
}

/// `n^{-1/2} (j/2) sum_{k1+k2=j-2} Tr(B M^k1 B M^k2)` with dense products.
fn dense_t(g: &TransitiveGraph, b: &Perturbation, j: usize) -> f64 {
    if j < 2 {
        return 0.0;
    }
    let (m, bm) = dense_walk(g, b);
    let n = g.n();
    let mut powers = vec![DMatrix::identity(n, n)];
    for k in 1..=j - 2 {
        powers.push(&powers[k - 1] * &m);
    }
    let s: f64 = (0..=j - 2)
        .map(|k1| (&bm * &powers[k1] * &bm * &powers[j - 2 - k1]).trace())
        .sum();
    s * j as f64 / 2.0 / (n as f64).sqrt()
}

fn catalog() -> Vec<(&'static str, usize, usize)> {
    vec![
        ("heawood", 14, 6),
        ("pappus", 18, 6),
        ("desargues", 20, 6),
        ("tutte-coxeter", 30, 8),
        ("foster", 90, 10),
    ]
}

#[test]
fn catalog_girths_match_search() {
    for (name, n, girth) in catalog() {
        let g = TransitiveGraph::lcf_named(name).unwrap();
        assert_eq!(g.n(), n, "{name}");
        assert_eq!(g.girth(), girth, "{name}");
        assert_eq!(dfs_girth(&g, 12), Some(girth), "{name}");
        assert!(g.is_bipartite(), "{name}");
    }
    let c7 = TransitiveGraph::cycle(7).unwrap();
    assert_eq!(dfs_girth(&c7, 10), Some(7));
    assert!(!c7.is_bipartite());
}

#[test]
fn adjacency_is_symmetric() {
    let mut graphs: Vec<TransitiveGraph> = catalog()
        .into_iter()
        .map(|(name, _, _)| TransitiveGraph::lcf_named(name).unwrap())
        .collect();
    graphs.push(TransitiveGraph::cayley(5, &standard_generators(5)).unwrap());
    for g in &graphs {
        for u in 0..g.n() {
            for &w in neighbors(g, u) {
                let back = neighbors(g, w as usize).iter().filter(|&&x| x as usize == u).count();
                let forth = neighbors(g, u).iter().filter(|&&x| x == w).count();
                assert_eq!(back, forth, "{}", g.label());
            }
        }
    }
}

#[test]
fn cayley_graphs_have_group_order() {
    for p in [3u32, 5, 7] {
        let g = TransitiveGraph::cayley(p, &standard_generators(p)).unwrap();
        let p = p as usize;
        assert_eq!(g.n(), p * (p * p - 1));
        assert_eq!(g.d(), 4);
    }
    let g5 = TransitiveGraph::cayley(5, &standard_generators(5)).unwrap();
    let g13 = TransitiveGraph::cayley(13, &standard_generators(13)).unwrap();
    assert_eq!(dfs_girth(&g5, 12), Some(g5.girth()));
    assert_eq!(dfs_girth(&g13, 12), Some(g13.girth()));
    assert!(g13.girth() >= g5.girth());
}

#[test]
fn monomials_match_dense_products() {
    let cases = [
        (TransitiveGraph::cycle(11).unwrap(), EnvironmentSampler::antisymmetric_pair()),
        (
            TransitiveGraph::lcf_named("heawood").unwrap(),
            EnvironmentSampler::new(SamplerKind::PermutedVector, 3, None).unwrap(),
        ),
        (
            TransitiveGraph::cayley(3, &standard_generators(3)).unwrap(),
            EnvironmentSampler::new(SamplerKind::BalancedSigns, 4, None).unwrap(),
        ),
    ];
    for (g, s) in &cases {
        let engine = TraceEngine::new(g, 9);
        for seed in 0..3 {
            let b = s.sample(g, seed).unwrap();
            let fast = engine.monomials(&b).unwrap();
            let sequential = engine.monomials_with(&b, false).unwrap();
            assert_eq!(fast, sequential);
            for (j, t) in fast.iter().enumerate() {
                let dense = dense_t(g, &b, j);
                assert!((t - dense).abs() < 1e-12, "{} j={j}: {t} vs {dense}", g.label());
                assert!((t_monomial(g, &b, j).unwrap() - dense).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn cycle_t2_is_the_sign_correlation() {
    let n = 15;
    let g = TransitiveGraph::cycle(n).unwrap();
    let b = EnvironmentSampler::antisymmetric_pair().sample(&g, 3).unwrap();
    // row u is (sigma_u on the predecessor, -sigma_u on the successor)
    let sigma: Vec<f64> = (0..n).map(|u| b.row(u)[0]).collect();
    let corr: f64 = (0..n).map(|u| sigma[u] * sigma[(u + 1) % n]).sum();
    let expected = -2.0 * corr / (n as f64).sqrt();
    assert!((t_monomial(&g, &b, 2).unwrap() - expected).abs() < 1e-13);
}

#[test]
fn odd_monomials_vanish_on_bipartite_graphs() {
    let g = TransitiveGraph::lcf_named("desargues").unwrap();
    let s = EnvironmentSampler::new(SamplerKind::PermutedVector, 3, None).unwrap();
    let b = s.sample(&g, 17).unwrap();
    let t = TraceEngine::new(&g, 9).monomials(&b).unwrap();
    for j in [3, 5, 7, 9] {
        assert!(t[j].abs() < 1e-13);
        assert!(dense_t(&g, &b, j).abs() < 1e-12);
    }
}

/// Exact `E[T(z^i) T(z^j)]` over every realization of the antisymmetric pair.
fn enumerated_moments(n: usize, jmax: usize) -> Vec<Vec<f64>> {
    let g = TransitiveGraph::cycle(n).unwrap();
    let s = EnvironmentSampler::antisymmetric_pair();
    let engine = TraceEngine::new(&g, jmax);
    let mut acc = vec![vec![0.0; jmax + 1]; jmax + 1];
    let total = 1usize << n;
    for mask in 0..total {
        let entries: Vec<f64> = (0..n)
            .flat_map(|u| {
                let sign = if mask >> u & 1 == 1 { 1.0 } else { -1.0 };
                [sign, -sign]
            })
            .collect();
        let b = Perturbation::from_rows(&g, s.c1(), entries).unwrap();
        let t = engine.monomials_with(&b, false).unwrap();
        for i in 0..=jmax {
            for j in 0..=jmax {
                acc[i][j] += t[i] * t[j] / total as f64;
            }
        }
    }
    acc
}

#[test]
fn alpha_matches_exact_enumeration_on_small_cycles() {
    for n in [8usize, 9] {
        let jmax = n - 2;
        let exact = enumerated_moments(n, jmax);
        let g = TransitiveGraph::cycle(n).unwrap();
        let table = AlphaTable::for_graph(&g, &EnvironmentSampler::antisymmetric_pair(), jmax).unwrap();
        for i in 0..=jmax {
            for j in 0..=jmax {
                assert!(table.gated(i, j));
                let predicted = table.monomial_covariance(i, j).unwrap();
                assert!(
                    (predicted - exact[i][j]).abs() < 1e-10,
                    "C_{n} ({i},{j}): {predicted} vs {}",
                    exact[i][j]
                );
            }
        }
        assert!((exact[2][2] - 4.0).abs() < 1e-12);
    }
}

#[test]
fn foster_alpha_is_tree_alpha_below_the_girth() {
    let g = TransitiveGraph::lcf_named("foster").unwrap();
    let s = EnvironmentSampler::new(SamplerKind::PermutedVector, 3, None).unwrap();
    let table = AlphaTable::for_graph(&g, &s, 8).unwrap();
    for i in 0..=8 {
        for j in 0..=8 - i {
            let tree = tree_alpha(3, &s, i, j, required_depth(i, j)).unwrap();
            assert!(table.is_tree_exact(i, j));
            assert!((table.alpha(i, j).unwrap() - tree).abs() < 1e-12, "({i},{j})");
        }
    }
    // bipartite: alpha vanishes unless i + j is even
    for i in 2..=8 {
        for j in 2..=8 {
            if (i + j) % 2 == 1 {
                assert!(table.alpha(i, j).unwrap().abs() < 1e-13);
            }
        }
    }
}

#[test]
fn cycle_alpha_is_stable_in_n() {
    let s = EnvironmentSampler::antisymmetric_pair();
    let small = AlphaTable::for_graph(&TransitiveGraph::cycle(20).unwrap(), &s, 8).unwrap();
    let large = AlphaTable::for_graph(&TransitiveGraph::cycle(41).unwrap(), &s, 8).unwrap();
    for i in 0..=8 {
        for j in 0..=8 {
            assert!((small.alpha(i, j).unwrap() - large.alpha(i, j).unwrap()).abs() < 1e-12);
        }
    }
}

#[test]
fn tree_alpha_ignores_the_sampler() {
    let balanced = EnvironmentSampler::new(SamplerKind::BalancedSigns, 4, None).unwrap();
    let perm = EnvironmentSampler::new(SamplerKind::PermutedVector, 4, None).unwrap();
    for i in 2..=6 {
        for j in 2..=6 {
            let depth = required_depth(i, j);
            let a = tree_alpha(4, &balanced, i, j, depth).unwrap();
            let b = tree_alpha(4, &perm, i, j, depth).unwrap();
            assert!((a - b).abs() < 1e-12, "({i},{j}): {a} vs {b}");
            let deeper = tree_alpha(4, &perm, i, j, depth + 2).unwrap();
            assert!((b - deeper).abs() < 1e-12);
        }
    }
    assert!((tree_alpha(3, &EnvironmentSampler::new(SamplerKind::PermutedVector, 3, None).unwrap(), 2, 2, 3).unwrap() - 3.0).abs() < 1e-14);
    assert!(tree_alpha(4, &perm, 4, 4, 2).is_err());
}

#[test]
fn tree_h_form_matches_the_kernel_for_squared_functions() {
    // E[T~(z) T~(z)] on the 3-regular tree from alpha and from the kernel.
    let s = EnvironmentSampler::new(SamplerKind::PermutedVector, 3, None).unwrap();
    let table = AlphaTable::tree(3, &s, 6).unwrap();
    let f = PowerSeries::polynomial(vec![0.0, 1.0, 0.5]);
    let squared = f.compose_square();
    let from_alpha = table.h_form(&squared, &squared).unwrap();
    let t = girthlab::treeform::TreeModel::new(3.0).unwrap();
    let from_kernel = t.tree_covariance(&f, &f, 1e-11).value;
    assert!((from_alpha - from_kernel).abs() < 1e-8, "{from_alpha} vs {from_kernel}");
}
