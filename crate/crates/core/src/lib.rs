//! Spectral noise of random walks in random environments on finite
//! vertex-transitive graphs of large girth.

pub mod covariance;
pub mod environment;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod graphs;
pub mod quadrature;
pub mod series;
pub mod stats;
pub mod treeform;
pub mod walks;

pub use environment::{EnvironmentSampler, Perturbation, SamplerKind};
pub use error::{Error, Result};
pub use graphs::{GraphSpec, TransitiveGraph};
pub use series::PowerSeries;
