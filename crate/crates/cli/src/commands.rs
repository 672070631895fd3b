use std::fs;
use std::str::FromStr;

use anyhow::{Context, Result};
use girthlab::covariance::AlphaTable;
use girthlab::experiments::{run_campaign, ExperimentConfig};
use girthlab::functionals::{m_eps, t_function, DEFAULT_TRUNCATION_TOLERANCE};
use girthlab::graphs::GraphSpec;
use girthlab::treeform::{kernel_grid, TreeModel};
use girthlab::{EnvironmentSampler, PowerSeries, SamplerKind, TransitiveGraph};
use num_complex::Complex64;
use serde::Serialize;

use crate::output::{csv, json, Sink};
use crate::{
    AlphaArgs, Cli, Command, DensityArgs, GraphArgs, HformArgs, KernelGridArgs, McArgs, SampleArgs,
    SamplerArgs, StieltjesArgs, TfunArgs, UsageError, VerifyCommand,
};

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse<T: FromStr>(what: &str, text: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    text.parse().map_err(|e| usage(format!("bad {what} {text:?}: {e}")))
}

impl GraphArgs {
    fn spec(&self) -> Result<GraphSpec> {
        if let Some(text) = &self.graph {
            return parse("graph description", text);
        }
        let Some(family) = &self.family else {
            return Err(usage("give --graph or --family"));
        };
        let mut text = family.clone();
        if let Some(n) = self.n {
            text += &format!(" n={n}");
        }
        if let Some(name) = &self.name {
            text += &format!(" name={name}");
        }
        if let Some(p) = self.p {
            text += &format!(" p={p} gens=standard");
        }
        parse("graph description", &text)
    }

    fn build(&self) -> Result<(GraphSpec, TransitiveGraph)> {
        let spec = self.spec()?;
        let g = spec.build()?;
        Ok((spec, g))
    }
}

impl SamplerArgs {
    fn build(&self, d: usize) -> Result<EnvironmentSampler> {
        let kind = match &self.sampler {
            Some(s) => parse::<SamplerKind>("sampler", s)?,
            None if d == 2 => SamplerKind::AntisymmetricPair,
            None => SamplerKind::PermutedVector,
        };
        Ok(EnvironmentSampler::new(kind, d, self.base_vector.as_deref())?)
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut sink = Sink::new(cli.out.clone());
    let mut config = serde_json::to_value(cli)?;
    let name = match &cli.command {
        Command::Graph(a) => {
            graph(a, &mut sink)?;
            "graph"
        }
        Command::Sample(a) => {
            sample(a, cli.seed.unwrap_or(0), &mut sink)?;
            "sample"
        }
        Command::Tfun(a) => {
            tfun(a, cli.seed.unwrap_or(0), &mut sink)?;
            "tfun"
        }
        Command::Alpha(a) => {
            alpha(a, &mut sink)?;
            "alpha"
        }
        Command::Hform(a) => {
            hform(a, &mut sink)?;
            "hform"
        }
        Command::KernelGrid(a) => {
            kernel(a, &mut sink)?;
            "kernel-grid"
        }
        Command::Density(a) => {
            density(a, &mut sink)?;
            "density"
        }
        Command::Verify(VerifyCommand::Stieltjes(a)) => {
            stieltjes(a, &mut sink)?;
            "verify stieltjes"
        }
        Command::Mc(a) => {
            let resolved = mc(a, cli.seed, &mut sink)?;
            config["resolved"] = serde_json::to_value(resolved)?;
            "mc"
        }
    };
    sink.finish(name, cli.seed, &config)
}

#[derive(Serialize)]
struct GraphReport {
    label: String,
    n: usize,
    d: usize,
    girth: usize,
    bipartite: bool,
}

fn graph(a: &GraphArgs, sink: &mut Sink) -> Result<()> {
    let (_, g) = a.build()?;
    let report = GraphReport {
        label: g.label().to_string(),
        n: g.n(),
        d: g.d(),
        girth: g.girth(),
        bipartite: g.is_bipartite(),
    };
    sink.primary(&json(&report)?)
}

fn sample(a: &SampleArgs, seed: u64, sink: &mut Sink) -> Result<()> {
    let (_, g) = a.graph.build()?;
    let b = a.sampler.build(g.d())?.sample(&g, seed)?;
    let mut bytes = Vec::new();
    b.write_csv(&mut bytes)?;
    sink.primary(&bytes)
}

#[derive(Serialize)]
struct TfunReport {
    graph: String,
    sampler: String,
    seed: u64,
    f: String,
    t: f64,
    tail_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_eps: Option<f64>,
}

fn tfun(a: &TfunArgs, seed: u64, sink: &mut Sink) -> Result<()> {
    let (spec, g) = a.graph.build()?;
    let sampler = a.sampler.build(g.d())?;
    let mut f: PowerSeries = parse("series", &a.f)?;
    if a.squared {
        f = f.compose_square();
    }
    let b = sampler.sample(&g, seed)?;
    let value = t_function(&g, &b, &f)?;
    let m = match a.eps {
        Some(eps) => Some(m_eps(&g, &b, &f, eps, DEFAULT_TRUNCATION_TOLERANCE)?),
        None => None,
    };
    let report = TfunReport {
        graph: spec.to_string(),
        sampler: sampler.to_string(),
        seed,
        f: f.to_string(),
        t: value.t,
        tail_bound: value.tail_bound,
        eps: a.eps,
        m_eps: m,
    };
    sink.primary(&json(&report)?)
}

fn alpha(a: &AlphaArgs, sink: &mut Sink) -> Result<()> {
    let table = match a.tree {
        Some(d) => {
            let s = a.sampler.build(d)?;
            match a.depth {
                Some(depth) => AlphaTable::tree_with_depth(d, &s, a.imax, depth)?,
                None => AlphaTable::tree(d, &s, a.imax)?,
            }
        }
        None => {
            let (_, g) = a.graph.build()?;
            AlphaTable::for_graph(&g, &a.sampler.build(g.d())?, a.imax)?
        }
    };
    sink.primary(&json(&table)?)
}

#[derive(Serialize)]
struct HformReport {
    source: String,
    f: String,
    g: String,
    h: f64,
    bound: f64,
    gated: bool,
    tree_exact: bool,
}

fn hform(a: &HformArgs, sink: &mut Sink) -> Result<()> {
    let text = fs::read_to_string(&a.table)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.table.display())))?;
    let table: AlphaTable =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad alpha table {}: {e}", a.table.display())))?;
    let f: PowerSeries = parse("series", &a.f)?;
    let g: PowerSeries = parse("series", &a.g)?;
    let report = HformReport {
        source: table.source.clone(),
        f: f.to_string(),
        g: g.to_string(),
        h: table.h_form(&f, &g)?,
        bound: table.h_bound(&f, &g),
        gated: table.h_gated(&f, &g),
        tree_exact: table.h_tree_exact(&f, &g),
    };
    sink.primary(&json(&report)?)
}

fn kernel(a: &KernelGridArgs, sink: &mut Sink) -> Result<()> {
    let t = TreeModel::new(a.d)?;
    let grid = kernel_grid(&t, a.nx, a.ny)?;
    sink.primary(&csv(["x", "y", "beta"], grid.into_iter().map(|(x, y, b)| [x, y, b])))
}

fn density(a: &DensityArgs, sink: &mut Sink) -> Result<()> {
    if a.points == 0 {
        return Err(usage("--points must be positive"));
    }
    let t = TreeModel::new(a.d)?;
    let rho = t.rho();
    let rows = (0..a.points).map(|i| {
        let x = rho * (i as f64 + 0.5) / a.points as f64;
        [x, t.limit_density(x)]
    });
    sink.primary(&csv(["x", "density"], rows))
}

#[derive(Serialize)]
struct StieltjesReport {
    d: f64,
    lambda: Complex64,
    mu: Complex64,
    closed_form: Complex64,
    transform: Complex64,
    residual: f64,
    quadrature_error: f64,
    nodes: usize,
}

fn stieltjes(a: &StieltjesArgs, sink: &mut Sink) -> Result<()> {
    let lambda: Complex64 = parse("complex number", &a.lambda)?;
    let mu: Complex64 = parse("complex number", &a.mu)?;
    let t = TreeModel::new(a.d)?;
    let closed_form = t.lhs_closed(lambda, mu)?;
    let q = t.stieltjes_transform(lambda, mu, a.tol)?;
    let transform = q.require(a.tol)?;
    let report = StieltjesReport {
        d: a.d,
        lambda,
        mu,
        closed_form,
        transform,
        residual: (closed_form - transform).norm(),
        quadrature_error: q.error,
        nodes: q.nodes,
    };
    sink.primary(&json(&report)?)
}

fn mc(a: &McArgs, seed: Option<u64>, sink: &mut Sink) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| usage(format!("cannot read config {}: {e}", a.config.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text)
        .map_err(|e| usage(format!("bad config {}: {e}", a.config.display())))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    log::info!("campaign on {} with {} samples", cfg.graph, cfg.samples);
    let result = run_campaign(&cfg).context("campaign failed")?;
    sink.primary(&json(&result)?)?;
    if let Some(path) = &a.samples_csv {
        let mut bytes = Vec::new();
        result.write_samples_csv(&mut bytes)?;
        sink.file(path, &bytes)?;
    }
    for check in result.checks.iter().filter(|c| !c.passed) {
        log::warn!("check {} failed: {}", check.name, check.detail);
    }
    if a.strict && !result.passed() {
        anyhow::bail!("some statistical checks failed");
    }
    Ok(cfg)
}
