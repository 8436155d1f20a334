//! The multilayer stream graph `(T, V, 𝓛, L_M, V_M, W_M, E_M)`.
//!
//! Layers are tuples with one elementary layer per aspect. They are encoded
//! as a mixed-radix [`LayerId`] over the aspect sizes, so every layer of the
//! Cartesian product has an id without being stored anywhere.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{Interval, Resolution, TimeError, TimeSet};

/// Upper bound on the size of the layer product.
pub const MAX_LAYERS: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("closure violation: {0}")]
    ClosureViolation(Violation),
    #[error("{what} {interval} lies outside the study interval {study}")]
    OutOfStudyInterval {
        what: String,
        interval: Interval,
        study: Interval,
    },
    #[error("unknown coordinate {value:?} for aspect {aspect:?}")]
    UnknownAspectCoordinate { aspect: String, value: String },
    #[error("layer has {got} coordinates, expected {expected}")]
    LayerArity { expected: usize, got: usize },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("unknown node-layer ({node}, {layer})")]
    UnknownNodeLayer { node: String, layer: String },
    #[error("unknown layer {0}")]
    UnknownLayer(String),
    #[error("unknown aspect {0:?}")]
    UnknownAspect(String),
    #[error("invalid aspect {name:?}: {reason}")]
    InvalidAspect { name: String, reason: &'static str },
    #[error("layer product has {0} layers, above the supported maximum")]
    TooManyLayers(u64),
    #[error("link between layers {a} and {b} rejected by the intralayer-only policy")]
    InterlayerLinkRejected { a: String, b: String },
    #[error("link endpoints are the same node-layer ({node}, {layer})")]
    IdenticalEndpoints { node: String, layer: String },
    #[error(transparent)]
    Time(#[from] TimeError),
}

/// One dimension of the layer structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aspect {
    pub name: String,
    pub elementary_layers: Vec<String>,
}

impl Aspect {
    pub fn new<S: Into<String>, I, E>(name: S, elementary: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = E>,
        E: Into<String>,
    {
        let aspect = Aspect {
            name: name.into(),
            elementary_layers: elementary.into_iter().map(Into::into).collect(),
        };
        aspect.check()?;
        Ok(aspect)
    }

    fn check(&self) -> Result<(), ModelError> {
        if self.elementary_layers.is_empty() {
            return Err(ModelError::InvalidAspect {
                name: self.name.clone(),
                reason: "no elementary layers",
            });
        }
        let mut seen = std::collections::HashSet::new();
        if !self.elementary_layers.iter().all(|e| seen.insert(e)) {
            return Err(ModelError::InvalidAspect {
                name: self.name.clone(),
                reason: "duplicate elementary layer",
            });
        }
        Ok(())
    }

    pub fn position(&self, elementary: &str) -> Option<u32> {
        self.elementary_layers
            .iter()
            .position(|e| e == elementary)
            .map(|p| p as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerId(pub u32);

impl LayerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A layer spelled out as one elementary-layer index per aspect.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Layer {
    pub coordinates: Vec<u32>,
}

/// The aspects of a graph and the mixed-radix encoding of their product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpace {
    aspects: Vec<Aspect>,
    len: u32,
}

impl LayerSpace {
    pub fn new(aspects: Vec<Aspect>) -> Result<Self, ModelError> {
        let mut len: u64 = 1;
        let mut names = std::collections::HashSet::new();
        for a in &aspects {
            a.check()?;
            if !names.insert(a.name.as_str()) {
                return Err(ModelError::InvalidAspect {
                    name: a.name.clone(),
                    reason: "duplicate aspect name",
                });
            }
            len = len.saturating_mul(a.elementary_layers.len() as u64);
            if len > MAX_LAYERS {
                return Err(ModelError::TooManyLayers(len));
            }
        }
        Ok(LayerSpace {
            aspects,
            len: len as u32,
        })
    }

    pub fn aspects(&self) -> &[Aspect] {
        &self.aspects
    }

    /// Number of layers in the full product.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn aspect_index(&self, name: &str) -> Option<usize> {
        self.aspects.iter().position(|a| a.name == name)
    }

    pub fn ids(&self) -> impl Iterator<Item = LayerId> {
        (0..self.len).map(LayerId)
    }

    pub fn id_of(&self, layer: &Layer) -> Result<LayerId, ModelError> {
        if layer.coordinates.len() != self.aspects.len() {
            return Err(ModelError::LayerArity {
                expected: self.aspects.len(),
                got: layer.coordinates.len(),
            });
        }
        let mut id: u32 = 0;
        for (aspect, &c) in self.aspects.iter().zip(&layer.coordinates) {
            let radix = aspect.elementary_layers.len() as u32;
            if c >= radix {
                return Err(ModelError::UnknownAspectCoordinate {
                    aspect: aspect.name.clone(),
                    value: c.to_string(),
                });
            }
            id = id * radix + c;
        }
        Ok(LayerId(id))
    }

    /// Resolves elementary-layer names, one per aspect, to a layer id.
    pub fn id_by_names<S: AsRef<str>>(&self, names: &[S]) -> Result<LayerId, ModelError> {
        if names.len() != self.aspects.len() {
            return Err(ModelError::LayerArity {
                expected: self.aspects.len(),
                got: names.len(),
            });
        }
        let coordinates = self
            .aspects
            .iter()
            .zip(names)
            .map(|(aspect, n)| {
                aspect
                    .position(n.as_ref())
                    .ok_or_else(|| ModelError::UnknownAspectCoordinate {
                        aspect: aspect.name.clone(),
                        value: n.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.id_of(&Layer { coordinates })
    }

    /// Parses a layer label as produced by [`LayerSpace::label`].
    pub fn id_by_label(&self, label: &str) -> Result<LayerId, ModelError> {
        let parts: Vec<&str> = if self.aspects.len() == 1 {
            vec![label]
        } else {
            label.split('|').collect()
        };
        self.id_by_names(&parts)
    }

    pub fn layer(&self, id: LayerId) -> Layer {
        let mut rest = id.0;
        let mut coordinates = vec![0; self.aspects.len()];
        for (slot, aspect) in coordinates.iter_mut().zip(&self.aspects).rev() {
            let radix = aspect.elementary_layers.len() as u32;
            *slot = rest % radix;
            rest /= radix;
        }
        Layer { coordinates }
    }

    pub fn coordinate(&self, id: LayerId, aspect: usize) -> u32 {
        let mut rest = id.0;
        for a in self.aspects[aspect + 1..].iter() {
            rest /= a.elementary_layers.len() as u32;
        }
        rest % self.aspects[aspect].elementary_layers.len() as u32
    }

    /// Human-readable label: elementary-layer names joined by `|`.
    pub fn label(&self, id: LayerId) -> String {
        let layer = self.layer(id);
        self.aspects
            .iter()
            .zip(&layer.coordinates)
            .map(|(a, &c)| a.elementary_layers[c as usize].as_str())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn contains(&self, id: LayerId) -> bool {
        id.0 < self.len
    }
}

/// A node on a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeLayer {
    pub node: NodeId,
    pub layer: LayerId,
}

impl NodeLayer {
    pub fn new(node: NodeId, layer: LayerId) -> Self {
        NodeLayer { node, layer }
    }
}

/// One interaction record. Endpoints are stored in canonical order (`a < b`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalLink {
    pub time: Interval,
    pub a: NodeLayer,
    pub b: NodeLayer,
}

impl TemporalLink {
    /// Returns `None` when both endpoints are the same node-layer.
    pub fn new(time: Interval, x: NodeLayer, y: NodeLayer) -> Option<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Some(TemporalLink { time, a: x, b: y }),
            std::cmp::Ordering::Greater => Some(TemporalLink { time, a: y, b: x }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn endpoints(&self) -> (NodeLayer, NodeLayer) {
        (self.a, self.b)
    }

    pub fn involves(&self, nl: NodeLayer) -> bool {
        self.a == nl || self.b == nl
    }

    pub fn involves_node(&self, node: NodeId) -> bool {
        self.a.node == node || self.b.node == node
    }

    pub fn involves_layer(&self, layer: LayerId) -> bool {
        self.a.layer == layer || self.b.layer == layer
    }

    pub fn is_intralayer(&self) -> bool {
        self.a.layer == self.b.layer
    }

    /// The endpoint opposite to `nl`, if `nl` is an endpoint.
    pub fn other(&self, nl: NodeLayer) -> Option<NodeLayer> {
        if self.a == nl {
            Some(self.b)
        } else if self.b == nl {
            Some(self.a)
        } else {
            None
        }
    }

    pub fn duration(&self) -> i64 {
        self.time.length()
    }
}

/// A breach of the closure constraints, naming the offending element and the
/// instants it occupies without support.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A link exists while one of its endpoints is absent.
    LinkOutsidePresence {
        link_index: usize,
        link: TemporalLink,
        endpoint: NodeLayer,
        uncovered: TimeSet,
    },
    /// A node-layer is present while its layer does not exist.
    NodeLayerOutsideLayer { node_layer: NodeLayer, uncovered: TimeSet },
    /// Some time set reaches outside the study interval.
    OutsideStudyInterval { what: String, uncovered: TimeSet },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LinkOutsidePresence {
                link_index,
                link,
                endpoint,
                uncovered,
            } => write!(
                f,
                "link #{link_index} at {} requires node-layer ({}, {}) over {uncovered}",
                link.time, endpoint.node.0, endpoint.layer.0
            ),
            Violation::NodeLayerOutsideLayer { node_layer, uncovered } => write!(
                f,
                "node-layer ({}, {}) present while its layer is absent over {uncovered}",
                node_layer.node.0, node_layer.layer.0
            ),
            Violation::OutsideStudyInterval { what, uncovered } => {
                write!(f, "{what} outside the study interval over {uncovered}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildMode {
    /// Links are rejected unless presence already covers them.
    #[default]
    Strict,
    /// Presence is extended to cover every added link.
    AutoMaterialize,
}

/// Raw components of a graph, before indexes are built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphParts {
    pub study: Interval,
    pub resolution: Resolution,
    pub space: LayerSpace,
    pub node_names: Vec<String>,
    /// Explicit layer lifetimes; missing layers exist over the whole study interval.
    pub layer_presence: BTreeMap<LayerId, TimeSet>,
    pub node_layer_presence: BTreeMap<NodeLayer, TimeSet>,
    pub links: Vec<TemporalLink>,
    pub intralayer_only: bool,
}

/// An immutable multilayer stream graph with query indexes.
#[derive(Debug, Clone)]
pub struct MultilayerStreamGraph {
    study: Interval,
    study_set: TimeSet,
    resolution: Resolution,
    space: LayerSpace,
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    layer_presence: BTreeMap<LayerId, TimeSet>,
    node_layer_presence: BTreeMap<NodeLayer, TimeSet>,
    links: Vec<TemporalLink>,
    pair_presence: BTreeMap<(NodeLayer, NodeLayer), TimeSet>,
    node_incident: Vec<Vec<u32>>,
    intralayer_only: bool,
}

impl PartialEq for MultilayerStreamGraph {
    fn eq(&self, other: &Self) -> bool {
        self.study == other.study
            && self.resolution == other.resolution
            && self.space == other.space
            && self.node_names == other.node_names
            && self.layer_presence == other.layer_presence
            && self.node_layer_presence == other.node_layer_presence
            && self.links == other.links
            && self.intralayer_only == other.intralayer_only
    }
}

impl MultilayerStreamGraph {
    /// Assembles a graph from parts without checking closure; see [`validate`].
    ///
    /// Time sets are normalized and links sorted.
    ///
    /// [`validate`]: MultilayerStreamGraph::validate
    pub fn from_parts_unchecked(parts: GraphParts) -> Self {
        let GraphParts {
            study,
            resolution,
            space,
            node_names,
            layer_presence,
            node_layer_presence,
            mut links,
            intralayer_only,
        } = parts;
        links.sort_unstable();
        let node_index = node_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NodeId(i as u32)))
            .collect();
        let layer_presence = layer_presence
            .into_iter()
            .map(|(k, v)| (k, retag(v.normalize(), resolution)))
            .collect();
        let node_layer_presence = node_layer_presence
            .into_iter()
            .map(|(k, v)| (k, retag(v.normalize(), resolution)))
            .collect();

        let mut raw_pairs: BTreeMap<(NodeLayer, NodeLayer), Vec<Interval>> = BTreeMap::new();
        let mut node_incident = vec![Vec::new(); node_names.len()];
        for (i, link) in links.iter().enumerate() {
            raw_pairs.entry((link.a, link.b)).or_default().push(link.time);
            if let Some(v) = node_incident.get_mut(link.a.node.0 as usize) {
                v.push(i as u32);
            }
            if link.b.node != link.a.node {
                if let Some(v) = node_incident.get_mut(link.b.node.0 as usize) {
                    v.push(i as u32);
                }
            }
        }
        let pair_presence = raw_pairs
            .into_iter()
            .map(|(k, v)| (k, TimeSet::from_intervals_at(resolution, v)))
            .collect();

        MultilayerStreamGraph {
            study,
            study_set: TimeSet::from_intervals_at(resolution, [study]),
            resolution,
            space,
            node_names,
            node_index,
            layer_presence,
            node_layer_presence,
            links,
            pair_presence,
            node_incident,
            intralayer_only,
        }
    }

    /// Assembles and validates; the first violation is returned as an error.
    pub fn from_parts(parts: GraphParts) -> Result<Self, ModelError> {
        let g = MultilayerStreamGraph::from_parts_unchecked(parts);
        match g.validate().into_iter().next() {
            Some(v) => Err(ModelError::ClosureViolation(v)),
            None => Ok(g),
        }
    }

    pub fn into_parts(self) -> GraphParts {
        GraphParts {
            study: self.study,
            resolution: self.resolution,
            space: self.space,
            node_names: self.node_names,
            layer_presence: self.layer_presence,
            node_layer_presence: self.node_layer_presence,
            links: self.links,
            intralayer_only: self.intralayer_only,
        }
    }

    pub fn to_parts(&self) -> GraphParts {
        self.clone().into_parts()
    }

    pub fn study_interval(&self) -> Interval {
        self.study
    }

    pub fn study_set(&self) -> &TimeSet {
        &self.study_set
    }

    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    pub fn space(&self) -> &LayerSpace {
        &self.space
    }

    pub fn aspects(&self) -> &[Aspect] {
        self.space.aspects()
    }

    pub fn intralayer_only(&self) -> bool {
        self.intralayer_only
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_names.len() as u32).map(NodeId)
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.node_names[node.0 as usize]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.node_index.get(name).copied()
    }

    pub fn layer_label(&self, layer: LayerId) -> String {
        self.space.label(layer)
    }

    pub fn links(&self) -> &[TemporalLink] {
        &self.links
    }

    /// `V_M` with presence, ordered by node then layer.
    pub fn node_layers(&self) -> &BTreeMap<NodeLayer, TimeSet> {
        &self.node_layer_presence
    }

    pub fn has_node_layer(&self, nl: NodeLayer) -> bool {
        self.node_layer_presence.contains_key(&nl)
    }

    /// Explicitly restricted layer lifetimes.
    pub fn explicit_layer_presence(&self) -> &BTreeMap<LayerId, TimeSet> {
        &self.layer_presence
    }

    /// Lifetime of a layer; the whole study interval unless restricted.
    pub fn layer_presence(&self, layer: LayerId) -> &TimeSet {
        self.layer_presence.get(&layer).unwrap_or(&self.study_set)
    }

    /// Layers carrying at least one node-layer, in id order.
    pub fn layers_in_use(&self) -> Vec<LayerId> {
        let mut layers: Vec<LayerId> = self.node_layer_presence.keys().map(|nl| nl.layer).collect();
        layers.sort_unstable();
        layers.dedup();
        layers
    }

    pub fn node_layer_presence(&self, nl: NodeLayer) -> Result<&TimeSet, ModelError> {
        self.node_layer_presence
            .get(&nl)
            .ok_or_else(|| self.unknown_node_layer(nl))
    }

    /// Node-layers of one node.
    pub fn layers_of(&self, node: NodeId) -> impl Iterator<Item = (&NodeLayer, &TimeSet)> + '_ {
        let lo = NodeLayer::new(node, LayerId(0));
        let hi = NodeLayer::new(node, LayerId(u32::MAX));
        self.node_layer_presence.range(lo..=hi)
    }

    /// `T_u`: union of the node's presence over every layer.
    pub fn node_presence(&self, node: NodeId) -> Result<TimeSet, ModelError> {
        if node.0 as usize >= self.node_names.len() {
            return Err(ModelError::UnknownNode(node.0.to_string()));
        }
        Ok(self
            .layers_of(node)
            .fold(TimeSet::with_resolution(self.resolution), |acc, (_, ts)| {
                acc.union_same(ts)
            }))
    }

    /// Union of the times of all links between two node-layers, in either order.
    pub fn link_presence(&self, x: NodeLayer, y: NodeLayer) -> Result<TimeSet, ModelError> {
        for nl in [x, y] {
            if !self.has_node_layer(nl) {
                return Err(self.unknown_node_layer(nl));
            }
        }
        let key = if x <= y { (x, y) } else { (y, x) };
        Ok(self
            .pair_presence
            .get(&key)
            .cloned()
            .unwrap_or_else(|| TimeSet::with_resolution(self.resolution)))
    }

    /// Linked node-layer pairs (canonical order) with their link presence.
    pub fn linked_pairs(&self) -> &BTreeMap<(NodeLayer, NodeLayer), TimeSet> {
        &self.pair_presence
    }

    /// Indices into [`links`](Self::links) of links touching any node-layer of `node`.
    pub fn node_incident_links(&self, node: NodeId) -> &[u32] {
        &self.node_incident[node.0 as usize]
    }

    /// Checks both closure constraints and containment in the study interval.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let empty = TimeSet::with_resolution(self.resolution);
        for (i, link) in self.links.iter().enumerate() {
            let time = TimeSet::from_intervals_at(self.resolution, [link.time]);
            if !self.study.contains_interval(&link.time) {
                out.push(Violation::OutsideStudyInterval {
                    what: format!("link #{i}"),
                    uncovered: time.difference(&self.study_set).unwrap_or_default(),
                });
            }
            for endpoint in [link.a, link.b] {
                let presence = self.node_layer_presence.get(&endpoint).unwrap_or(&empty);
                if !presence.contains_interval(&link.time) {
                    out.push(Violation::LinkOutsidePresence {
                        link_index: i,
                        link: *link,
                        endpoint,
                        uncovered: uncovered(&time, presence),
                    });
                }
            }
        }
        for (nl, presence) in &self.node_layer_presence {
            let layer = self.layer_presence(nl.layer);
            if !layer.is_superset_of(presence) {
                out.push(Violation::NodeLayerOutsideLayer {
                    node_layer: *nl,
                    uncovered: uncovered(presence, layer),
                });
            }
            if !self.study_set.is_superset_of(presence) {
                out.push(Violation::OutsideStudyInterval {
                    what: format!("node-layer ({}, {})", nl.node.0, nl.layer.0),
                    uncovered: uncovered(presence, &self.study_set),
                });
            }
        }
        for (layer, presence) in &self.layer_presence {
            if !self.study_set.is_superset_of(presence) {
                out.push(Violation::OutsideStudyInterval {
                    what: format!("layer {}", layer.0),
                    uncovered: uncovered(presence, &self.study_set),
                });
            }
        }
        out
    }

    fn unknown_node_layer(&self, nl: NodeLayer) -> ModelError {
        ModelError::UnknownNodeLayer {
            node: self
                .node_names
                .get(nl.node.0 as usize)
                .cloned()
                .unwrap_or_else(|| nl.node.0.to_string()),
            layer: if self.space.contains(nl.layer) {
                self.space.label(nl.layer)
            } else {
                nl.layer.0.to_string()
            },
        }
    }
}

// Closed difference: the instants of `need` that `have` does not cover.
fn uncovered(need: &TimeSet, have: &TimeSet) -> TimeSet {
    need.difference(have).unwrap_or_default()
}

fn retag(ts: TimeSet, resolution: Resolution) -> TimeSet {
    if ts.resolution() == resolution {
        ts
    } else {
        TimeSet::from_intervals_at(resolution, ts.intervals().iter().copied())
    }
}

#[derive(Debug, Default)]
struct Presence {
    set: TimeSet,
    pending: Vec<Interval>,
}

impl Presence {
    fn flush(&mut self) -> &TimeSet {
        if !self.pending.is_empty() {
            let merged = self.set.intervals().iter().copied().chain(self.pending.drain(..));
            self.set = TimeSet::from_intervals_at(self.set.resolution(), merged);
        }
        &self.set
    }
}

/// Single-owner constructor for [`MultilayerStreamGraph`].
#[derive(Debug)]
pub struct GraphBuilder {
    study: Interval,
    resolution: Resolution,
    space: LayerSpace,
    mode: BuildMode,
    intralayer_only: bool,
    node_names: Vec<String>,
    node_index: HashMap<String, NodeId>,
    layer_presence: BTreeMap<LayerId, Presence>,
    node_layers: BTreeMap<NodeLayer, Presence>,
    links: Vec<TemporalLink>,
}

impl GraphBuilder {
    pub fn new(study: Interval, aspects: Vec<Aspect>, mode: BuildMode) -> Result<Self, ModelError> {
        Ok(GraphBuilder {
            study,
            resolution: Resolution::default(),
            space: LayerSpace::new(aspects)?,
            mode,
            intralayer_only: false,
            node_names: Vec::new(),
            node_index: HashMap::new(),
            layer_presence: BTreeMap::new(),
            node_layers: BTreeMap::new(),
            links: Vec::new(),
        })
    }

    pub fn resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    /// Rejects links whose endpoints lie on different layers.
    pub fn intralayer_only(mut self, on: bool) -> Self {
        self.intralayer_only = on;
        self
    }

    pub fn space(&self) -> &LayerSpace {
        &self.space
    }

    pub fn mode(&self) -> BuildMode {
        self.mode
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Interns a node name.
    pub fn node(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.node_index.get(name) {
            return id;
        }
        let id = NodeId(self.node_names.len() as u32);
        self.node_names.push(name.to_string());
        self.node_index.insert(name.to_string(), id);
        id
    }

    pub fn layer<S: AsRef<str>>(&self, names: &[S]) -> Result<LayerId, ModelError> {
        self.space.id_by_names(names)
    }

    /// Restricts a layer's lifetime (it defaults to the whole study interval).
    pub fn set_layer_presence(&mut self, layer: LayerId, presence: TimeSet) -> Result<&mut Self, ModelError> {
        self.check_layer(layer)?;
        self.check_in_study("layer presence", &presence)?;
        let entry = self.layer_presence.entry(layer).or_default();
        entry.set = TimeSet::from_intervals_at(self.resolution, presence.intervals().iter().copied());
        entry.pending.clear();
        Ok(self)
    }

    /// Adds presence of a node on a layer.
    pub fn add_presence(&mut self, node: NodeId, layer: LayerId, interval: Interval) -> Result<&mut Self, ModelError> {
        self.check_layer(layer)?;
        self.check_node(node)?;
        if !self.study.contains_interval(&interval) {
            return Err(self.out_of_study("presence", interval));
        }
        self.presence_entry(NodeLayer::new(node, layer)).pending.push(interval);
        if self.mode == BuildMode::AutoMaterialize {
            self.extend_layer(layer, interval);
        }
        Ok(self)
    }

    /// Declares a node-layer without presence.
    pub fn add_node_layer(&mut self, node: NodeId, layer: LayerId) -> Result<&mut Self, ModelError> {
        self.check_layer(layer)?;
        self.check_node(node)?;
        self.presence_entry(NodeLayer::new(node, layer));
        Ok(self)
    }

    pub fn add_link(&mut self, time: Interval, x: NodeLayer, y: NodeLayer) -> Result<&mut Self, ModelError> {
        for nl in [x, y] {
            self.check_layer(nl.layer)?;
            self.check_node(nl.node)?;
        }
        if !self.study.contains_interval(&time) {
            return Err(self.out_of_study("link", time));
        }
        let link = TemporalLink::new(time, x, y).ok_or_else(|| ModelError::IdenticalEndpoints {
            node: self.node_names[x.node.0 as usize].clone(),
            layer: self.space.label(x.layer),
        })?;
        if self.intralayer_only && !link.is_intralayer() {
            return Err(ModelError::InterlayerLinkRejected {
                a: self.space.label(link.a.layer),
                b: self.space.label(link.b.layer),
            });
        }
        match self.mode {
            BuildMode::Strict => {
                let idx = self.links.len();
                for endpoint in [link.a, link.b] {
                    let presence = self.presence_entry(endpoint).flush();
                    if !presence.contains_interval(&time) {
                        let need = TimeSet::from_intervals_at(presence.resolution(), [time]);
                        let uncovered = uncovered(&need, presence);
                        return Err(ModelError::ClosureViolation(Violation::LinkOutsidePresence {
                            link_index: idx,
                            link,
                            endpoint,
                            uncovered,
                        }));
                    }
                }
            }
            BuildMode::AutoMaterialize => {
                for endpoint in [link.a, link.b] {
                    self.presence_entry(endpoint).pending.push(time);
                    self.extend_layer(endpoint.layer, time);
                }
            }
        }
        self.links.push(link);
        Ok(self)
    }

    /// Convenience: resolves node and layer names, then adds the link.
    pub fn add_link_named<S: AsRef<str>>(
        &mut self,
        time: Interval,
        (u, layer_u): (&str, &[S]),
        (v, layer_v): (&str, &[S]),
    ) -> Result<&mut Self, ModelError> {
        let lu = self.layer(layer_u)?;
        let lv = self.layer(layer_v)?;
        let nu = self.node(u);
        let nv = self.node(v);
        self.add_link(time, NodeLayer::new(nu, lu), NodeLayer::new(nv, lv))
    }

    pub fn finish(mut self) -> Result<MultilayerStreamGraph, ModelError> {
        let layer_presence = std::mem::take(&mut self.layer_presence)
            .into_iter()
            .map(|(k, mut p)| {
                p.flush();
                (k, p.set)
            })
            .collect();
        let node_layer_presence = std::mem::take(&mut self.node_layers)
            .into_iter()
            .map(|(k, mut p)| {
                p.flush();
                (k, p.set)
            })
            .collect();
        MultilayerStreamGraph::from_parts(GraphParts {
            study: self.study,
            resolution: self.resolution,
            space: self.space,
            node_names: self.node_names,
            layer_presence,
            node_layer_presence,
            links: self.links,
            intralayer_only: self.intralayer_only,
        })
    }

    fn presence_entry(&mut self, nl: NodeLayer) -> &mut Presence {
        let resolution = self.resolution;
        self.node_layers.entry(nl).or_insert_with(|| Presence {
            set: TimeSet::with_resolution(resolution),
            pending: Vec::new(),
        })
    }

    fn extend_layer(&mut self, layer: LayerId, interval: Interval) {
        // unrestricted layers already span the study interval
        if let Some(p) = self.layer_presence.get_mut(&layer) {
            p.pending.push(interval);
        }
    }

    fn check_layer(&self, layer: LayerId) -> Result<(), ModelError> {
        if self.space.contains(layer) {
            Ok(())
        } else {
            Err(ModelError::UnknownLayer(layer.0.to_string()))
        }
    }

    fn check_node(&self, node: NodeId) -> Result<(), ModelError> {
        if (node.0 as usize) < self.node_names.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownNode(node.0.to_string()))
        }
    }

    fn check_in_study(&self, what: &str, ts: &TimeSet) -> Result<(), ModelError> {
        match ts.intervals().iter().find(|iv| !self.study.contains_interval(iv)) {
            Some(iv) => Err(self.out_of_study(what, *iv)),
            None => Ok(()),
        }
    }

    fn out_of_study(&self, what: &str, interval: Interval) -> ModelError {
        ModelError::OutOfStudyInterval {
            what: what.to_string(),
            interval,
            study: self.study,
        }
    }
}
