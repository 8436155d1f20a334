//! Reductions of a multilayer stream graph to static multilayer graphs and
//! ordinary stream graphs, plus graph-to-graph restrictions (time windows,
//! layer filters, aspect collapse) used by the analysis pipelines.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    Aspect, GraphParts, LayerId, LayerSpace, ModelError, MultilayerStreamGraph, NodeId, NodeLayer, TemporalLink,
};
use crate::time::{Instant, Interval, TimeSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjectionError {
    #[error("instant {t} lies outside the study interval {study}")]
    OutOfStudyInterval { t: Instant, study: Interval },
    #[error("unknown layer id {0}")]
    UnknownLayer(u32),
    #[error("unknown aspect {0:?}")]
    UnknownAspect(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Anything with a vertex count and an edge count.
pub trait StaticGraph {
    fn vertex_count(&self) -> usize;
    fn edge_count(&self) -> usize;
}

/// A simple undirected graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SimpleGraph<N: Ord> {
    pub nodes: BTreeSet<N>,
    pub edges: BTreeSet<(N, N)>,
}

impl<N: Ord> StaticGraph for SimpleGraph<N> {
    fn vertex_count(&self) -> usize {
        self.nodes.len()
    }
    fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

impl<N: Ord + Copy> SimpleGraph<N> {
    pub fn new<I: IntoIterator<Item = N>, E: IntoIterator<Item = (N, N)>>(nodes: I, edges: E) -> Self {
        SimpleGraph {
            nodes: nodes.into_iter().collect(),
            edges: edges
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| if u < v { (u, v) } else { (v, u) })
                .collect(),
        }
    }

    pub fn degree(&self, n: N) -> usize {
        self.edges.iter().filter(|(u, v)| *u == n || *v == n).count()
    }
}

/// Static multilayer graph `(V_M, E_M, V, L)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultilayerGraph {
    pub nodes: BTreeSet<NodeId>,
    pub layers: BTreeSet<LayerId>,
    pub node_layers: BTreeSet<NodeLayer>,
    pub edges: BTreeSet<(NodeLayer, NodeLayer)>,
    /// Set when the inducing window was empty.
    pub empty_window: bool,
}

impl StaticGraph for MultilayerGraph {
    fn vertex_count(&self) -> usize {
        self.node_layers.len()
    }
    fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

impl MultilayerGraph {
    /// Drops layer coordinates: nodes are linked when any of their node-layers are.
    pub fn collapse_nodes(&self) -> SimpleGraph<NodeId> {
        SimpleGraph::new(
            self.nodes.iter().copied(),
            self.edges.iter().map(|(a, b)| (a.node, b.node)),
        )
    }
}

/// A stream graph `(T, V, W, E)` over any node type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamGraph<N: Ord> {
    pub study: TimeSet,
    pub presence: BTreeMap<N, TimeSet>,
    /// Keyed by canonical pair `(u, v)` with `u < v`.
    pub links: BTreeMap<(N, N), TimeSet>,
}

impl<N: Ord + Copy> StreamGraph<N> {
    pub fn nodes(&self) -> impl Iterator<Item = N> + '_ {
        self.presence.keys().copied()
    }

    pub fn link_presence(&self, u: N, v: N) -> Option<&TimeSet> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.links.get(&key)
    }

    /// Number of distinct linked pairs incident to `n`.
    pub fn degree_count(&self, n: N) -> usize {
        self.links.keys().filter(|(u, v)| *u == n || *v == n).count()
    }
}

/// The interlayer stream graph between layers `α` and `β`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteStreamGraph {
    pub stream: StreamGraph<NodeLayer>,
    pub pair: (LayerId, LayerId),
}

impl BipartiteStreamGraph {
    pub fn is_intralayer(&self) -> bool {
        self.pair.0 == self.pair.1
    }

    /// Node-layers on the `α` side and on the `β` side.
    pub fn sides(&self) -> (Vec<NodeLayer>, Vec<NodeLayer>) {
        let left = self.stream.nodes().filter(|nl| nl.layer == self.pair.0).collect();
        let right = self.stream.nodes().filter(|nl| nl.layer == self.pair.1).collect();
        (left, right)
    }
}

/// Multilayer graph of everything that exists at some instant of `window`.
pub fn induced_multilayer(g: &MultilayerStreamGraph, window: &TimeSet) -> MultilayerGraph {
    let mut out = MultilayerGraph {
        empty_window: window.is_empty(),
        ..MultilayerGraph::default()
    };
    if window.is_empty() {
        return out;
    }
    for (nl, presence) in g.node_layers() {
        if presence.intersects(window) {
            out.node_layers.insert(*nl);
            out.nodes.insert(nl.node);
            out.layers.insert(nl.layer);
        }
    }
    for link in g.links() {
        if window.intersects(&TimeSet::from_intervals_at(window.resolution(), [link.time])) {
            out.edges.insert((link.a, link.b));
        }
    }
    out
}

/// The multilayer graph at instant `t`.
pub fn snapshot(g: &MultilayerStreamGraph, t: Instant) -> Result<MultilayerGraph, ProjectionError> {
    let study = g.study_interval();
    if !study.contains(t) {
        return Err(ProjectionError::OutOfStudyInterval { t, study });
    }
    Ok(induced_multilayer(g, &t.as_point_set(g.resolution())))
}

/// `S^(α,β)`: node-layers of the two layers over their common lifetime, with
/// the links joining one layer to the other.
pub fn interlayer_stream(
    g: &MultilayerStreamGraph,
    alpha: LayerId,
    beta: LayerId,
) -> Result<BipartiteStreamGraph, ProjectionError> {
    for l in [alpha, beta] {
        if !g.space().contains(l) {
            return Err(ProjectionError::UnknownLayer(l.0));
        }
    }
    let common = g.layer_presence(alpha).intersect_same(g.layer_presence(beta));
    let presence = g
        .node_layers()
        .iter()
        .filter(|(nl, _)| nl.layer == alpha || nl.layer == beta)
        .map(|(nl, ts)| (*nl, ts.intersect_same(&common)))
        .collect();
    let (lo, hi) = if alpha <= beta { (alpha, beta) } else { (beta, alpha) };
    let links = g
        .linked_pairs()
        .iter()
        .filter(|((a, b), _)| {
            let (x, y) = if a.layer <= b.layer {
                (a.layer, b.layer)
            } else {
                (b.layer, a.layer)
            };
            x == lo && y == hi
        })
        .map(|(k, ts)| (*k, ts.intersect_same(&common)))
        .filter(|(_, ts)| !ts.is_empty())
        .collect();
    Ok(BipartiteStreamGraph {
        stream: StreamGraph {
            study: common,
            presence,
            links,
        },
        pair: (alpha, beta),
    })
}

/// `S^α = S^(α,α)`.
pub fn intralayer_stream(g: &MultilayerStreamGraph, alpha: LayerId) -> Result<StreamGraph<NodeLayer>, ProjectionError> {
    Ok(interlayer_stream(g, alpha, alpha)?.stream)
}

/// The layer-blind stream graph: `T_u = ∪_α T_(u,α)` and one link per node
/// pair covering every instant any of their node-layers interact.
pub fn aggregated_stream(g: &MultilayerStreamGraph) -> StreamGraph<NodeId> {
    let mut presence = BTreeMap::new();
    for u in g.nodes() {
        presence.insert(u, g.node_presence(u).expect("node from graph"));
    }
    let mut raw: BTreeMap<(NodeId, NodeId), Vec<crate::time::Interval>> = BTreeMap::new();
    for link in g.links() {
        let (u, v) = (link.a.node, link.b.node);
        if u == v {
            continue;
        }
        let key = if u < v { (u, v) } else { (v, u) };
        raw.entry(key).or_default().push(link.time);
    }
    let links = raw
        .into_iter()
        .map(|(k, v)| (k, TimeSet::from_intervals_at(g.resolution(), v)))
        .collect();
    StreamGraph {
        study: g.study_set().clone(),
        presence,
        links,
    }
}

/// Restricts a graph to a time window: `T` becomes `window ∩ T` and every
/// presence and link is clipped to it. Links missing the window are dropped.
pub fn time_window(g: &MultilayerStreamGraph, window: Interval) -> MultilayerStreamGraph {
    let study = g.study_interval();
    let clipped_study = study.intersection(&window).unwrap_or(Interval {
        start: window.start,
        end: window.start,
    });
    let parts = g.to_parts();
    let mut layer_presence: BTreeMap<LayerId, TimeSet> = parts
        .layer_presence
        .into_iter()
        .map(|(k, ts)| (k, ts.clip(&clipped_study)))
        .collect();
    if study.intersection(&window).is_none() {
        // the window misses T: every layer is absent
        for l in g.space().ids() {
            layer_presence.insert(l, TimeSet::with_resolution(g.resolution()));
        }
    }
    let in_window = study.intersection(&window).is_some();
    let node_layer_presence = parts
        .node_layer_presence
        .into_iter()
        .map(|(k, ts)| {
            let ts = if in_window {
                ts.clip(&clipped_study)
            } else {
                TimeSet::with_resolution(g.resolution())
            };
            (k, ts)
        })
        .collect();
    let links = if in_window {
        parts
            .links
            .into_iter()
            .filter_map(|l| {
                l.time
                    .intersection(&clipped_study)
                    .map(|time| TemporalLink { time, ..l })
            })
            .collect()
    } else {
        Vec::new()
    };
    MultilayerStreamGraph::from_parts_unchecked(GraphParts {
        study: clipped_study,
        layer_presence,
        node_layer_presence,
        links,
        ..parts_header(g)
    })
}

/// Keeps node-layers on layers accepted by `keep`, and links whose two
/// endpoints are both kept.
pub fn filter_layers<F: Fn(LayerId) -> bool>(g: &MultilayerStreamGraph, keep: F) -> MultilayerStreamGraph {
    let parts = g.to_parts();
    MultilayerStreamGraph::from_parts_unchecked(GraphParts {
        layer_presence: parts.layer_presence.into_iter().filter(|(l, _)| keep(*l)).collect(),
        node_layer_presence: parts
            .node_layer_presence
            .into_iter()
            .filter(|(nl, _)| keep(nl.layer))
            .collect(),
        links: parts
            .links
            .into_iter()
            .filter(|l| keep(l.a.layer) && keep(l.b.layer))
            .collect(),
        ..parts_header(g)
    })
}

/// Projects the layer structure onto a subset of aspects. Node-layers that
/// coincide after projection are merged (presence unioned); links whose
/// endpoints merge into one node-layer are dropped.
pub fn collapse_aspects(g: &MultilayerStreamGraph, keep: &[&str]) -> Result<MultilayerStreamGraph, ProjectionError> {
    let space = g.space();
    let kept: Vec<usize> = keep
        .iter()
        .map(|name| {
            space
                .aspect_index(name)
                .ok_or_else(|| ProjectionError::UnknownAspect(name.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let aspects: Vec<Aspect> = kept.iter().map(|&i| space.aspects()[i].clone()).collect();
    let new_space = LayerSpace::new(aspects)?;
    let map_layer = |l: LayerId| -> LayerId {
        let coordinates = kept.iter().map(|&a| space.coordinate(l, a)).collect();
        new_space
            .id_of(&crate::model::Layer { coordinates })
            .expect("projected coordinates are valid")
    };
    let map_nl = |nl: NodeLayer| NodeLayer::new(nl.node, map_layer(nl.layer));

    let mut node_layer_presence: BTreeMap<NodeLayer, TimeSet> = BTreeMap::new();
    for (nl, ts) in g.node_layers() {
        let entry = node_layer_presence
            .entry(map_nl(*nl))
            .or_insert_with(|| TimeSet::with_resolution(g.resolution()));
        *entry = entry.union_same(ts);
    }
    // A projected layer exists whenever one of its preimages does; layers
    // without restrictions keep spanning T.
    let mut layer_presence: BTreeMap<LayerId, TimeSet> = BTreeMap::new();
    let mut unrestricted: BTreeSet<LayerId> = BTreeSet::new();
    for l in space.ids() {
        let target = map_layer(l);
        match g.explicit_layer_presence().get(&l) {
            Some(ts) => {
                let entry = layer_presence
                    .entry(target)
                    .or_insert_with(|| TimeSet::with_resolution(g.resolution()));
                *entry = entry.union_same(ts);
            }
            None => {
                unrestricted.insert(target);
            }
        }
    }
    for l in unrestricted {
        layer_presence.remove(&l);
    }
    let links = g
        .links()
        .iter()
        .filter_map(|l| TemporalLink::new(l.time, map_nl(l.a), map_nl(l.b)))
        .collect();
    Ok(MultilayerStreamGraph::from_parts_unchecked(GraphParts {
        space: new_space,
        layer_presence,
        node_layer_presence,
        links,
        intralayer_only: false,
        ..parts_header(g)
    }))
}

fn parts_header(g: &MultilayerStreamGraph) -> GraphParts {
    GraphParts {
        study: g.study_interval(),
        resolution: g.resolution(),
        space: g.space().clone(),
        node_names: g.node_names().to_vec(),
        layer_presence: BTreeMap::new(),
        node_layer_presence: BTreeMap::new(),
        links: Vec::new(),
        intralayer_only: g.intralayer_only(),
    }
}
