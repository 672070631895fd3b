use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{standard_generators, LcfCode, Mat2, TransitiveGraph};
use crate::error::{invalid, Error, Result};

/// Textual graph description: a family name followed by `key=value` pairs,
/// e.g. `cycle n=200`, `lcf name=foster`, `lcf code=[5,-5]^7 transitive=true`,
/// `cayley p=5 gens=standard` or `cayley p=7 gens=1,2,0,1;1,5,0,1;...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GraphSpec {
    Cycle { n: usize },
    LcfNamed { name: String },
    LcfCode { code: LcfCode },
    Cayley { p: u32, generators: Option<Vec<Mat2>> },
}

impl GraphSpec {
    pub fn build(&self) -> Result<TransitiveGraph> {
        match self {
            GraphSpec::Cycle { n } => TransitiveGraph::cycle(*n),
            GraphSpec::LcfNamed { name } => TransitiveGraph::lcf_named(name),
            GraphSpec::LcfCode { code } => TransitiveGraph::lcf(code),
            GraphSpec::Cayley { p, generators } => match generators {
                Some(g) => TransitiveGraph::cayley(*p, g),
                None => TransitiveGraph::cayley(*p, &standard_generators(*p)),
            },
        }
    }
}

fn parse_matrix(s: &str) -> Result<Mat2> {
    let v: Vec<i64> = s
        .split(',')
        .map(|t| t.trim().parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| invalid!("cannot parse matrix {s:?}"))?;
    match v.as_slice() {
        [a, b, c, d] => Ok(Mat2::new(*a, *b, *c, *d)),
        _ => Err(invalid!("a matrix needs 4 entries a,b,c,d, got {s:?}")),
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let family = tokens
            .next()
            .ok_or_else(|| invalid!("empty graph description"))?
            .to_ascii_lowercase();
        let mut params = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| invalid!("expected key=value, got {tok:?}"))?;
            params.insert(k.to_ascii_lowercase(), v.to_string());
        }
        let take = |key: &str| {
            params
                .get(key)
                .cloned()
                .ok_or_else(|| invalid!("graph {family} needs {key}=..."))
        };
        let spec = match family.as_str() {
            "cycle" => {
                let n = take("n")?;
                GraphSpec::Cycle {
                    n: n.parse().map_err(|_| invalid!("bad cycle length {n:?}"))?,
                }
            }
            "lcf" => {
                if let Some(name) = params.get("name") {
                    GraphSpec::LcfNamed { name: name.clone() }
                } else {
                    let mut code: LcfCode = take("code")?.parse()?;
                    code.declared_vertex_transitive = params
                        .get("transitive")
                        .map(|t| t == "true")
                        .unwrap_or(false);
                    GraphSpec::LcfCode { code }
                }
            }
            "cayley" => {
                let p = take("p")?;
                let p = p.parse().map_err(|_| invalid!("bad modulus {p:?}"))?;
                let generators = match params.get("gens").map(String::as_str) {
                    None | Some("standard") => None,
                    Some(list) => Some(
                        list.split(';')
                            .map(parse_matrix)
                            .collect::<Result<Vec<_>>>()?,
                    ),
                };
                GraphSpec::Cayley { p, generators }
            }
            other => return Err(invalid!("unknown graph family {other:?}")),
        };
        Ok(spec)
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Cycle { n } => write!(f, "cycle n={n}"),
            GraphSpec::LcfNamed { name } => write!(f, "lcf name={name}"),
            GraphSpec::LcfCode { code } => write!(
                f,
                "lcf code={code} transitive={}",
                code.declared_vertex_transitive
            ),
            GraphSpec::Cayley { p, generators: None } => write!(f, "cayley p={p} gens=standard"),
            GraphSpec::Cayley {
                p,
                generators: Some(g),
            } => write!(f, "cayley p={p} gens={}", super::cayley::describe(g)),
        }
    }
}

impl TryFrom<String> for GraphSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GraphSpec> for String {
    fn from(g: GraphSpec) -> String {
        g.to_string()
    }
}
