//! Graph clustering through group consensus of unstable linear multi-agent
//! systems.
//!
//! A weighted undirected graph is coupled to identical linear agents
//! `ẋ_i = A x_i + F Σ_j w_ij (x_j − x_i)`. With an unstable `A`, Laplacian
//! modes whose matrix `A − λF` is not Hurwitz keep vertices apart while the
//! Hurwitz modes pull them together, so the agents gather into clusters
//! fixed by the graph.
//!
//! Clusters are extracted two ways:
//!
//! * analytically, from the zero pattern of `PT` ([`agreement`]);
//! * empirically, by integrating the coupled system and comparing how fast
//!   agent pairs separate ([`sim::quasi_clusters`]).

pub mod agreement;
pub mod cli;
pub mod dynamics;
pub mod fixtures;
pub mod graph;
pub mod linalg;
pub mod plot;
pub mod report;
pub mod sim;
pub mod spectral;

pub use agreement::{AgreementReport, Partition};
pub use dynamics::{AgentDynamics, StabilityPartition};
pub use graph::{Laplacian, WeightedGraph};
pub use linalg::Matrix;
pub use sim::{SimConfig, Trajectory};
pub use spectral::SpectralData;
