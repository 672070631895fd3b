//! Monte Carlo campaigns: sample many environments on one graph, evaluate a
//! panel of functionals and compare the empirical moments with the exact
//! covariance form and its tree limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::AlphaTable;
use crate::environment::{derive_seed, EnvironmentSampler, SamplerKind};
use crate::error::{invalid, Error, Result};
use crate::functionals::{m_eps, TraceEngine, DEFAULT_TRUNCATION_TOLERANCE};
use crate::graphs::{GraphSpec, TransitiveGraph};
use crate::quadrature::DEFAULT_TOLERANCE;
use crate::series::PowerSeries;
use crate::stats::{self, NormalityReport};
use crate::treeform::TreeModel;

/// Acceptance threshold in standard errors.
pub const Z_MAX: f64 = 4.0;
/// Smallest acceptable KS p-value.
pub const P_MIN: f64 = 0.01;
/// Smallest acceptable log-log slope of `|m_eps - T|` against `eps`.
pub const SLOPE_MIN: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub kind: SamplerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_vector: Option<Vec<f64>>,
}

impl SamplerSpec {
    pub fn build(&self, d: usize) -> Result<EnvironmentSampler> {
        EnvironmentSampler::new(self.kind, d, self.base_vector.as_deref())
    }
}

/// One functional of the panel. With `squared`, the functional is
/// `T(f(z^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub squared: bool,
}

impl FunctionSpec {
    pub fn plain(coeffs: Vec<f64>) -> Self {
        FunctionSpec {
            name: None,
            coeffs,
            squared: false,
        }
    }

    pub fn squared(coeffs: Vec<f64>) -> Self {
        FunctionSpec {
            name: None,
            coeffs,
            squared: true,
        }
    }

    pub fn series(&self) -> PowerSeries {
        PowerSeries::polynomial(self.coeffs.clone())
    }

    /// The polynomial actually fed to `T`.
    pub fn effective(&self) -> PowerSeries {
        if self.squared {
            self.series().compose_square()
        } else {
            self.series()
        }
    }

    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, c)| match (k, *c == 1.0) {
                (0, _) => format!("{c}"),
                (1, true) => "z".to_string(),
                (_, true) => format!("z^{k}"),
                (1, false) => format!("{c}z"),
                (_, false) => format!("{c}z^{k}"),
            })
            .collect();
        let body = if terms.is_empty() { "0".to_string() } else { terms.join("+") };
        if self.squared {
            format!("~({body})")
        } else {
            body
        }
    }
}

fn default_epsilon_samples() -> usize {
    20
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub sampler: SamplerSpec,
    pub functions: Vec<FunctionSpec>,
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Optional `m_eps` sweep.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilons: Vec<f64>,
    /// Number of environments used for the `m_eps` sweep.
    #[serde(default = "default_epsilon_samples")]
    pub epsilon_samples: usize,
    /// Allow monomial degrees beyond `girth - 2`.
    #[serde(default)]
    pub ungated: bool,
    /// Also compute infinite-tree references.
    #[serde(default = "default_true")]
    pub tree_reference: bool,
    #[serde(default = "default_true")]
    pub normality: bool,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, sampler: SamplerSpec, functions: Vec<FunctionSpec>, samples: usize, seed: u64) -> Self {
        ExperimentConfig {
            graph,
            sampler,
            functions,
            samples,
            seed,
            epsilons: Vec::new(),
            epsilon_samples: default_epsilon_samples(),
            ungated: false,
            tree_reference: true,
            normality: true,
        }
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(invalid!("a campaign needs at least 2 samples, got {}", self.samples));
        }
        if self.functions.is_empty() {
            return Err(invalid!("a campaign needs at least one function"));
        }
        if self.functions.iter().any(|f| f.coeffs.is_empty()) {
            return Err(invalid!("function with an empty coefficient list"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0)) {
            return Err(invalid!("epsilon must be positive, got {e}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub label: String,
    pub n: usize,
    pub d: usize,
    pub girth: usize,
    pub bipartite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    /// Largest monomial degree in the panel.
    pub max_degree: usize,
    /// `girth - 2`: exact zero diagonals and exact covariance form.
    pub degree_gate: usize,
    /// `(girth - 2)/2 + 1`: every covariance pair is tree-exact.
    pub tree_gate: usize,
    pub ungated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSummary {
    pub label: String,
    /// Coefficients of the polynomial fed to `T`.
    pub coeffs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub mean_z: Option<f64>,
    pub normality: Option<NormalityReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Exact covariance form of the finite graph.
    HForm,
    /// Covariance form of the infinite tree.
    TreeAlpha,
    /// Double integral against the limiting kernel (squared panels only).
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub kind: ReferenceKind,
    pub value: f64,
    /// The reference is exact for this graph (gated or tree-exact).
    pub applicable: bool,
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: usize,
    pub b: usize,
    pub empirical: f64,
    /// Jackknife standard error of the empirical covariance.
    pub std_error: f64,
    pub references: Vec<Reference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub eps: f64,
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    pub function: usize,
    pub rows: Vec<EpsilonRow>,
    /// Least-squares slope of `log |m_eps - T|` against `log eps`, per seed.
    pub slopes: Vec<f64>,
    pub min_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub config: ExperimentConfig,
    pub graph: GraphInfo,
    pub sampler: String,
    pub c1: f64,
    pub gates: Gates,
    pub functions: Vec<FunctionSummary>,
    /// Empirical covariance matrix across the panel.
    pub covariance: Vec<Vec<f64>>,
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epsilon_sweeps: Vec<EpsilonSweep>,
    pub checks: Vec<Check>,
    /// Raw functional values, `samples[f][i]`; not serialized.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl CampaignResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `samples.csv` body: one row per sample, one column per functional.
    pub fn write_samples_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = self.functions.iter().map(|f| csv_field(&f.label)).collect();
        writeln!(w, "sample,{}", header.join(","))?;
        let n = self.samples.first().map_or(0, Vec::len);
        for i in 0..n {
            write!(w, "{i}")?;
            for col in &self.samples {
                write!(w, ",{:.16e}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn z_score(empirical: f64, reference: f64, se: f64) -> Option<f64> {
    if se > 0.0 {
        Some((empirical - reference) / se)
    } else if (empirical - reference).abs() <= 1e-10 * (1.0 + reference.abs()) {
        Some(0.0)
    } else {
        None
    }
}

fn within(z: Option<f64>) -> bool {
    z.is_some_and(|z| z.abs() <= Z_MAX)
}

/// Runs the campaign. Identical configs give identical results regardless
/// of the number of threads.
pub fn run_campaign(cfg: &ExperimentConfig) -> Result<CampaignResult> {
    cfg.validate()?;
    let g = cfg.graph.build()?;
    let sampler = cfg.sampler.build(g.d())?;
    let series: Vec<PowerSeries> = cfg.functions.iter().map(FunctionSpec::effective).collect();
    let max_degree = series.iter().map(PowerSeries::degree).max().unwrap_or(0).max(2);
    let girth = g.girth();
    let gates = Gates {
        max_degree,
        degree_gate: girth - 2,
        tree_gate: (girth - 2) / 2 + 1,
        ungated: cfg.ungated,
    };
    if max_degree > gates.degree_gate && !cfg.ungated {
        return Err(Error::GateViolation {
            degree: max_degree,
            girth,
            required_girth: max_degree + 2,
        });
    }

    let engine = TraceEngine::new(&g, max_degree);
    let per_sample: Vec<Vec<f64>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let b = sampler.sample(&g, derive_seed(cfg.seed, i as u64))?;
            let t = engine.monomials_with(&b, false)?;
            Ok(series
                .iter()
                .map(|f| f.coeffs().iter().zip(&t).map(|(a, t)| a * t).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    let samples: Vec<Vec<f64>> = (0..series.len())
        .map(|k| per_sample.iter().map(|row| row[k]).collect())
        .collect();

    let nf = cfg.samples as f64;
    let functions: Vec<FunctionSummary> = cfg
        .functions
        .iter()
        .zip(&series)
        .zip(&samples)
        .map(|((spec, f), xs)| {
            let mean = stats::mean(xs);
            let variance = stats::variance(xs);
            let std_error = (variance / nf).sqrt();
            let normality = (cfg.normality && xs.len() >= 100)
                .then(|| stats::normality_report(xs))
                .transpose()?;
            Ok(FunctionSummary {
                label: spec.label(),
                coeffs: f.coeffs().to_vec(),
                mean,
                variance,
                std_error,
                mean_z: z_score(mean, 0.0, std_error),
                normality,
            })
        })
        .collect::<Result<_>>()?;

    let m = series.len();
    let covariance: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| stats::covariance(&samples[a], &samples[b])).collect())
        .collect();

    let table = AlphaTable::for_graph(&g, &sampler, max_degree)?;
    let tree_table = if cfg.tree_reference {
        Some(AlphaTable::tree(g.d(), &sampler, max_degree)?)
    } else {
        None
    };
    let tree_model = TreeModel::new(g.d() as f64)?;

    let mut comparisons = Vec::new();
    for a in 0..m {
        for b in a..m {
            let se = stats::jackknife_covariance_se(&samples[a], &samples[b]);
            let empirical = covariance[a][b];
            let mut references = Vec::new();
            let (fa, fb) = (&series[a], &series[b]);
            let h = table.h_form(fa, fb)?;
            references.push(Reference {
                kind: ReferenceKind::HForm,
                value: h,
                applicable: table.h_gated(fa, fb),
                z: z_score(empirical, h, se),
                note: (!table.h_gated(fa, fb)).then(|| "ungated degree".to_string()),
            });
            if let Some(tree) = &tree_table {
                let exact = table.h_tree_exact(fa, fb);
                let v = tree.h_form(fa, fb)?;
                references.push(Reference {
                    kind: ReferenceKind::TreeAlpha,
                    value: v,
                    applicable: exact,
                    z: z_score(empirical, v, se),
                    note: (!exact).then(|| "graph is not tree-like at this degree".to_string()),
                });
                let (sa, sb) = (&cfg.functions[a], &cfg.functions[b]);
                if sa.squared && sb.squared {
                    let q = tree_model.tree_covariance(&sa.series(), &sb.series(), DEFAULT_TOLERANCE);
                    references.push(Reference {
                        kind: ReferenceKind::Kernel,
                        value: q.value,
                        applicable: exact && q.converged,
                        z: z_score(empirical, q.value, se),
                        note: (!q.converged).then(|| format!("quadrature error {:e}", q.error)),
                    });
                }
            }
            comparisons.push(Comparison {
                a,
                b,
                empirical,
                std_error: se,
                references,
            });
        }
    }

    let epsilon_sweeps = if cfg.epsilons.is_empty() {
        Vec::new()
    } else {
        epsilon_sweeps(cfg, &g, &sampler, &series, &samples)?
    };

    let mut result = CampaignResult {
        config: cfg.clone(),
        graph: GraphInfo {
            label: g.label().to_string(),
            n: g.n(),
            d: g.d(),
            girth,
            bipartite: g.is_bipartite(),
        },
        sampler: sampler.to_string(),
        c1: sampler.c1(),
        gates,
        functions,
        covariance,
        comparisons,
        epsilon_sweeps,
        checks: Vec::new(),
        samples,
    };
    result.checks = assess(&result);
    Ok(result)
}

fn epsilon_sweeps(
    cfg: &ExperimentConfig,
    g: &TransitiveGraph,
    sampler: &EnvironmentSampler,
    series: &[PowerSeries],
    samples: &[Vec<f64>],
) -> Result<Vec<EpsilonSweep>> {
    if g.n() > 5000 {
        return Err(invalid!("m_eps sweeps are limited to graphs with at most 5000 vertices"));
    }
    let count = cfg.epsilon_samples.min(cfg.samples);
    let mut sweeps = Vec::new();
    for (k, f) in series.iter().enumerate() {
        // diffs[i][e] = |m_eps - T| for seed i and epsilon e
        let diffs: Vec<Vec<f64>> = (0..count)
            .map(|i| {
                let b = sampler.sample(g, derive_seed(cfg.seed, i as u64))?;
                cfg.epsilons
                    .iter()
                    .map(|&eps| {
                        let m = m_eps(g, &b, f, eps, DEFAULT_TRUNCATION_TOLERANCE)?;
                        Ok((m - samples[k][i]).abs())
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let rows = cfg
            .epsilons
            .iter()
            .enumerate()
            .map(|(e, &eps)| {
                let col: Vec<f64> = diffs.iter().map(|r| r[e]).collect();
                EpsilonRow {
                    eps,
                    mean_abs_diff: stats::mean(&col),
                    max_abs_diff: col.iter().fold(0.0, |m: f64, x| m.max(*x)),
                }
            })
            .collect();
        let slopes: Vec<f64> = diffs
            .iter()
            .filter_map(|r| log_log_slope(&cfg.epsilons, r))
            .collect();
        let min_slope = slopes.iter().fold(f64::INFINITY, |m: f64, s| m.min(*s));
        sweeps.push(EpsilonSweep {
            function: k,
            rows,
            slopes,
            min_slope,
        });
    }
    Ok(sweeps)
}

/// Least-squares slope of `log y` against `log x`; `None` when some `y`
/// is zero (the difference vanished identically).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.iter().any(|y| !(*y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn assess(r: &CampaignResult) -> Vec<Check> {
    let mut checks = Vec::new();

    let worst_mean = r
        .functions
        .iter()
        .map(|f| f.mean_z.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "zero-mean".into(),
        passed: worst_mean <= Z_MAX,
        detail: format!("max |mean| / SE = {worst_mean:.3}"),
    });

    for (kind, name) in [
        (ReferenceKind::HForm, "covariance-h-form"),
        (ReferenceKind::TreeAlpha, "covariance-tree"),
        (ReferenceKind::Kernel, "covariance-kernel"),
    ] {
        let refs: Vec<&Reference> = r
            .comparisons
            .iter()
            .flat_map(|c| c.references.iter())
            .filter(|x| x.kind == kind && x.applicable)
            .collect();
        if refs.is_empty() {
            continue;
        }
        let worst = refs
            .iter()
            .map(|x| x.z.map_or(f64::INFINITY, f64::abs))
            .fold(0.0, f64::max);
        checks.push(Check {
            name: name.into(),
            passed: refs.iter().all(|x| within(x.z)),
            detail: format!("{} pairs, max |z| = {worst:.3}", refs.len()),
        });
    }

    let reports: Vec<(usize, &NormalityReport)> = r
        .functions
        .iter()
        .enumerate()
        .filter_map(|(k, f)| f.normality.as_ref().map(|n| (k, n)))
        .collect();
    if !reports.is_empty() {
        let mut notes = Vec::new();
        let mut passed = true;
        for (k, n) in reports {
            if n.degenerate {
                // A point mass is the normal law of variance zero; it is the
                // right answer exactly when the covariance form vanishes.
                let h = r
                    .comparisons
                    .iter()
                    .find(|c| c.a == k && c.b == k)
                    .and_then(|c| c.references.iter().find(|x| x.kind == ReferenceKind::HForm))
                    .map_or(f64::NAN, |x| x.value);
                let ok = h.abs() <= 1e-12 && n.mean.abs() <= 1e-12;
                passed &= ok;
                notes.push(format!("{}: degenerate, H = {h:e}", r.functions[k].label));
            } else {
                let ok = n.looks_normal(P_MIN);
                passed &= ok;
                notes.push(format!(
                    "{}: skew {:.4}, ex.kurt {:.4}, KS p {:.4}",
                    r.functions[k].label,
                    n.skewness.unwrap_or(f64::NAN),
                    n.excess_kurtosis.unwrap_or(f64::NAN),
                    n.ks_p_value.unwrap_or(f64::NAN)
                ));
            }
        }
        checks.push(Check {
            name: "normality".into(),
            passed,
            detail: notes.join("; "),
        });
    }

    if !r.epsilon_sweeps.is_empty() {
        let worst = r
            .epsilon_sweeps
            .iter()
            .map(|s| s.min_slope)
            .fold(f64::INFINITY, f64::min);
        checks.push(Check {
            name: "epsilon-slope".into(),
            passed: worst >= SLOPE_MIN,
            detail: format!("min slope {worst:.4}"),
        });
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_config(n: usize, samples: usize) -> ExperimentConfig {
        ExperimentConfig::new(
            format!("cycle n={n}").parse().unwrap(),
            SamplerSpec {
                kind: SamplerKind::AntisymmetricPair,
                base_vector: None,
            },
            vec![FunctionSpec::plain(vec![0.0, 0.0, 1.0])],
            samples,
            7,
        )
    }

    #[test]
    fn gate_violation_is_refused() {
        let mut cfg = cycle_config(6, 10);
        cfg.functions = vec![FunctionSpec::plain(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0])];
        assert!(matches!(
            run_campaign(&cfg),
            Err(Error::GateViolation { required_girth: 7, .. })
        ));
        cfg.ungated = true;
        let r = run_campaign(&cfg).unwrap();
        assert!(r.gates.ungated);
    }

    #[test]
    fn deterministic() {
        let cfg = cycle_config(30, 200);
        let a = run_campaign(&cfg).unwrap();
        let b = run_campaign(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            graph = "lcf name=foster"
            samples = 100
            seed = 3
            sampler = { kind = "permvec" }
            [[functions]]
            coeffs = [0, 1]
            squared = true
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.functions[0].effective().coeffs(), &[0.0, 0.0, 1.0]);
        let again = ExperimentConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert!(ExperimentConfig::from_toml("graph = 3").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(FunctionSpec::plain(vec![0.0, 0.0, 1.0]).label(), "z^2");
        assert_eq!(FunctionSpec::squared(vec![0.0, 1.0, 1.0]).label(), "~(z+z^2)");
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [0.1, 0.01, 0.001];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&xs, &[1.0, 0.0, 1.0]).is_none());
    }
}
