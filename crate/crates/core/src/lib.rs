//! Multilayer stream graphs: temporal, multi-aspect interaction data with
//! exact interval-based measures, projections, γ-paths, temporal random walks
//! and two eigenvalue-based layer centralities.

pub mod analysis;
pub mod centrality;
pub mod ingest;
pub mod measures;
pub mod model;
pub mod output;
pub mod par;
pub mod projections;
pub mod synthetic;
pub mod time;
pub mod walks;

pub use model::{
    Aspect, BuildMode, GraphBuilder, GraphParts, Layer, LayerId, LayerSpace, ModelError, MultilayerStreamGraph, NodeId,
    NodeLayer, TemporalLink, Violation,
};
pub use par::Execution;
pub use time::{Instant, Interval, Resolution, TimeError, TimeSet};
