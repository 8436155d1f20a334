//! Time-respecting paths, γ-reachability and seeded temporal random walkers.
//!
//! Walker dynamics:
//! - a walker sits on a node and may leave through any link record touching
//!   one of the node's node-layers (layers are switched for free at a node);
//! - a link `[s, e]` is feasible when some instant `h ≥ ready` with
//!   `h ≤ min(e, t_max)` exists, where `ready` is the start time for the first
//!   hop and `previous hop + γ` afterwards; the walker waits and crosses at
//!   `h = max(s, ready)`;
//! - the next link is drawn uniformly among feasible records other than the
//!   one just crossed, so a walker never bounces back over the same record;
//! - the walk stops at a dead end, past `t_max`, or after `max_hops` hops.
//!
//! Each walk owns a ChaCha stream keyed by `(seed, walk index)`, and all
//! accumulators are integers, so results do not depend on thread scheduling.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{LayerId, MultilayerStreamGraph, NodeId, NodeLayer, TemporalLink};
use crate::output::{csv_field, fmt_num};
use crate::par::{self, Execution};
use crate::time::{Instant, TimeSet};

/// One hop: the link between `from` and `to` is crossed at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub time: Instant,
    pub from: NodeLayer,
    pub to: NodeLayer,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct TemporalPath {
    pub hops: Vec<Hop>,
}

impl TemporalPath {
    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }
}

/// True iff every hop crosses an existing link at an instant where it is
/// present, hops chain on node-layers, and consecutive hop times advance by at
/// least `gamma`. The empty path is valid.
pub fn is_valid_path(g: &MultilayerStreamGraph, path: &TemporalPath, gamma: i64) -> bool {
    let hops_exist = path.hops.iter().all(|h| {
        let key = if h.from <= h.to { (h.from, h.to) } else { (h.to, h.from) };
        g.linked_pairs().get(&key).is_some_and(|ts| ts.contains(h.time))
    });
    hops_exist
        && path
            .hops
            .windows(2)
            .all(|w| w[0].to == w[1].from && w[1].time.0 >= w[0].time.0.saturating_add(gamma))
}

/// Whether a γ-path leaves `from.1` no earlier than `from.0` and reaches
/// `to.1` no later than `to.0`. Earliest-arrival search over node-layers.
pub fn reachable(g: &MultilayerStreamGraph, from: (Instant, NodeLayer), to: (Instant, NodeLayer), gamma: i64) -> bool {
    let (t0, source) = from;
    let (t1, target) = to;
    if t0 > t1 {
        return false;
    }
    if source == target {
        return true;
    }
    let links = g.links();
    // key: earliest instant the next hop may happen from that node-layer
    let mut best: std::collections::HashMap<NodeLayer, i64> = std::collections::HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(source, t0.0);
    heap.push(Reverse((t0.0, source)));
    while let Some(Reverse((ready, nl))) = heap.pop() {
        if best.get(&nl).is_some_and(|&b| b < ready) {
            continue;
        }
        for &i in g.node_incident_links(nl.node) {
            let link = &links[i as usize];
            let Some(next) = link.other(nl) else { continue };
            let hop = ready.max(link.time.start.0);
            if hop > link.time.end.0 || hop > t1.0 {
                continue;
            }
            if next == target {
                return true;
            }
            let next_ready = hop.saturating_add(gamma);
            if best.get(&next).is_none_or(|&b| next_ready < b) {
                best.insert(next, next_ready);
                heap.push(Reverse((next_ready, next)));
            }
        }
    }
    false
}

/// How layer exposure is accumulated along a walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureWeighting {
    /// 1 if the walk crosses at least one link of the layer.
    #[default]
    Indicator,
    /// Each crossed link weighs `t_max − t_hop`; rows are normalized to sum to 1.
    LinearHorizon,
}

impl std::str::FromStr for ExposureWeighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "indicator" => Ok(ExposureWeighting::Indicator),
            "linear-horizon" | "linear" => Ok(ExposureWeighting::LinearHorizon),
            other => Err(format!("unknown exposure weighting {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WalkPolicy {
    pub gamma: i64,
    pub num_walks: usize,
    pub seed: u64,
    pub t_max: Instant,
    pub max_hops: usize,
    pub weighting: ExposureWeighting,
}

impl WalkPolicy {
    pub const DEFAULT_MAX_HOPS: usize = 10_000;

    /// Policy with horizon at the end of the study interval.
    pub fn for_graph(g: &MultilayerStreamGraph, num_walks: usize, seed: u64) -> Self {
        WalkPolicy {
            gamma: 0,
            num_walks,
            seed,
            t_max: g.study_interval().end,
            max_hops: Self::DEFAULT_MAX_HOPS,
            weighting: ExposureWeighting::Indicator,
        }
    }

    pub fn check(&self, g: &MultilayerStreamGraph) -> Result<(), String> {
        if self.num_walks == 0 {
            return Err("num_walks must be at least 1".into());
        }
        if self.gamma < 0 {
            return Err("gamma must be non-negative".into());
        }
        if self.t_max > g.study_interval().end {
            return Err(format!("t_max {} is after the end of the study interval", self.t_max));
        }
        Ok(())
    }
}

/// Where walks start in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case", tag = "scheme", content = "t")]
pub enum StartScheme {
    /// Uniform over the start node's presence.
    #[default]
    UniformPresence,
    /// Every walk starts at this instant.
    Fixed(Instant),
}

/// Per-walk random stream.
pub fn walk_rng(seed: u64, walk_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(walk_index);
    rng
}

/// Read-only helper shared by all walks on one graph.
pub struct Walker<'g> {
    g: &'g MultilayerStreamGraph,
    max_len: Vec<i64>,
    presence: Vec<TimeSet>,
}

impl<'g> Walker<'g> {
    pub fn new(g: &'g MultilayerStreamGraph) -> Self {
        let links = g.links();
        let max_len = g
            .nodes()
            .map(|u| {
                g.node_incident_links(u)
                    .iter()
                    .map(|&i| links[i as usize].duration())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let presence = g
            .nodes()
            .map(|u| g.node_presence(u).expect("node from graph"))
            .collect();
        Walker { g, max_len, presence }
    }

    pub fn graph(&self) -> &'g MultilayerStreamGraph {
        self.g
    }

    pub fn presence(&self, u: NodeId) -> &TimeSet {
        &self.presence[u.0 as usize]
    }

    /// Draws a start instant, or `None` if the node never exists.
    pub fn start_time<R: Rng>(&self, u: NodeId, scheme: StartScheme, rng: &mut R) -> Option<Instant> {
        match scheme {
            StartScheme::Fixed(t) => Some(t),
            StartScheme::UniformPresence => sample_instant(self.presence(u), rng),
        }
    }

    /// Feasible link indices from node `u` when ready at `ready`, leaving out
    /// the record just crossed.
    pub fn feasible(&self, u: NodeId, ready: i64, t_max: i64, previous: Option<u32>) -> Vec<u32> {
        if ready > t_max {
            return Vec::new();
        }
        let (lo, hi) = self.window(u, ready, t_max);
        let links = self.g.links();
        self.g.node_incident_links(u)[lo..hi]
            .iter()
            .copied()
            .filter(|&i| links[i as usize].time.end.0 >= ready && Some(i) != previous)
            .collect()
    }

    // Candidate range in the node's start-sorted incident list.
    fn window(&self, u: NodeId, ready: i64, t_max: i64) -> (usize, usize) {
        let incident = self.g.node_incident_links(u);
        let links = self.g.links();
        let earliest_start = ready.saturating_sub(self.max_len[u.0 as usize]);
        let lo = incident.partition_point(|&i| links[i as usize].time.start.0 < earliest_start);
        let hi = incident.partition_point(|&i| links[i as usize].time.start.0 <= t_max);
        (lo, hi.max(lo))
    }

    fn pick<R: Rng>(&self, u: NodeId, ready: i64, t_max: i64, previous: Option<u32>, rng: &mut R) -> Option<u32> {
        if ready > t_max {
            return None;
        }
        let (lo, hi) = self.window(u, ready, t_max);
        if lo == hi {
            return None;
        }
        let incident = &self.g.node_incident_links(u)[lo..hi];
        let links = self.g.links();
        // rejection sampling over the range is uniform over its feasible subset
        for _ in 0..32 {
            let i = incident[rng.random_range(0..incident.len())];
            if links[i as usize].time.end.0 >= ready && Some(i) != previous {
                return Some(i);
            }
        }
        let feasible: Vec<u32> = incident
            .iter()
            .copied()
            .filter(|&i| links[i as usize].time.end.0 >= ready && Some(i) != previous)
            .collect();
        if feasible.is_empty() {
            None
        } else {
            Some(feasible[rng.random_range(0..feasible.len())])
        }
    }

    /// Runs one walk from node `u` at instant `t`.
    pub fn walk<R: Rng>(&self, u: NodeId, t: Instant, policy: &WalkPolicy, rng: &mut R) -> TemporalPath {
        let links = self.g.links();
        let mut path = TemporalPath::default();
        let mut node = u;
        let mut ready = t.0;
        let mut previous = None;
        while path.hops.len() < policy.max_hops {
            let Some(i) = self.pick(node, ready, policy.t_max.0, previous, rng) else {
                break;
            };
            previous = Some(i);
            let link = &links[i as usize];
            let hop = ready.max(link.time.start.0);
            let (from, to) = if link.a.node == node {
                (link.a, link.b)
            } else {
                (link.b, link.a)
            };
            path.hops.push(Hop {
                time: Instant(hop),
                from,
                to,
            });
            node = to.node;
            ready = hop.saturating_add(policy.gamma);
        }
        path
    }
}

/// Uniform instant from a time set: uniform over its measure, or over its
/// points when it has zero measure.
pub fn sample_instant<R: Rng>(ts: &TimeSet, rng: &mut R) -> Option<Instant> {
    if ts.is_empty() {
        return None;
    }
    let total = ts.measure();
    if total == 0 {
        let iv = ts.intervals()[rng.random_range(0..ts.intervals().len())];
        return Some(iv.start);
    }
    let mut offset = rng.random_range(0..total);
    for iv in ts.intervals() {
        if offset < iv.length() {
            return Some(iv.start + offset);
        }
        offset -= iv.length();
    }
    unreachable!("offset below total measure")
}

/// One walk from `start`, drawn from the stream of walk index 0.
pub fn sample_walk(g: &MultilayerStreamGraph, start: (Instant, NodeId), policy: &WalkPolicy) -> TemporalPath {
    let mut rng = walk_rng(policy.seed, 0);
    Walker::new(g).walk(start.1, start.0, policy, &mut rng)
}

/// Node × layer exposure values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExposureMatrix {
    pub nodes: Vec<NodeId>,
    pub node_labels: Vec<String>,
    pub layers: Vec<LayerId>,
    pub layer_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub weighting: ExposureWeighting,
    pub starts: StartScheme,
    pub policy: Option<WalkPolicy>,
}

impl ExposureMatrix {
    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn columns(&self) -> usize {
        self.layers.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node");
        for l in &self.layer_labels {
            out.push(',');
            out.push_str(&csv_field(l));
        }
        out.push('\n');
        for (label, row) in self.node_labels.iter().zip(&self.values) {
            out.push_str(&csv_field(label));
            for &x in row {
                let _ = write!(out, ",{}", fmt_num(x));
            }
            out.push('\n');
        }
        out
    }
}

fn column_index(layers: &[LayerId]) -> impl Fn(LayerId) -> Option<usize> + '_ {
    move |l| layers.binary_search(&l).ok()
}

// Integer per-layer totals of one walk.
fn accumulate(
    link: &TemporalLink,
    hop: i64,
    policy: &WalkPolicy,
    col: &dyn Fn(LayerId) -> Option<usize>,
    touched: &mut [bool],
    weights: &mut [u128],
) {
    let mut layers = [link.a.layer, link.b.layer];
    let n = if layers[0] == layers[1] { 1 } else { 2 };
    layers[..n].sort_unstable();
    for &l in &layers[..n] {
        if let Some(j) = col(l) {
            touched[j] = true;
            weights[j] += (policy.t_max.0 - hop).max(0) as u128;
        }
    }
}

/// Exposure of each node to each layer in use, estimated from `num_walks`
/// walks per node.
pub fn layer_exposure(g: &MultilayerStreamGraph, starts: StartScheme, policy: &WalkPolicy) -> ExposureMatrix {
    layer_exposure_with(g, starts, policy, Execution::default())
}

pub fn layer_exposure_with(
    g: &MultilayerStreamGraph,
    starts: StartScheme,
    policy: &WalkPolicy,
    exec: Execution,
) -> ExposureMatrix {
    let walker = Walker::new(g);
    let layers = g.layers_in_use();
    let lookup = layers.clone();
    let col = column_index(&lookup);
    let k = layers.len();
    let nodes: Vec<NodeId> = g.nodes().collect();
    let links = g.links();
    let values = par::map(exec, &nodes, |&u| {
        let mut crossed = vec![0u64; k];
        let mut weight = vec![0u128; k];
        let mut touched = vec![false; k];
        let mut w = vec![0u128; k];
        for walk in 0..policy.num_walks {
            let stream = u.0 as u64 * policy.num_walks as u64 + walk as u64;
            let mut rng = walk_rng(policy.seed, stream);
            let Some(t) = walker.start_time(u, starts, &mut rng) else {
                break;
            };
            let path = walker.walk(u, t, policy, &mut rng);
            touched.iter_mut().for_each(|x| *x = false);
            w.iter_mut().for_each(|x| *x = 0);
            for hop in &path.hops {
                let link = find_link(links, g, hop);
                accumulate(link, hop.time.0, policy, &col, &mut touched, &mut w);
            }
            for j in 0..k {
                crossed[j] += touched[j] as u64;
                weight[j] += w[j];
            }
        }
        match policy.weighting {
            ExposureWeighting::Indicator => crossed
                .iter()
                .map(|&c| c as f64 / policy.num_walks as f64)
                .collect::<Vec<f64>>(),
            ExposureWeighting::LinearHorizon => normalize_row(&weight),
        }
    });
    ExposureMatrix {
        node_labels: nodes.iter().map(|&u| g.node_name(u).to_string()).collect(),
        nodes,
        layer_labels: layers.iter().map(|&l| g.layer_label(l)).collect(),
        layers,
        values,
        weighting: policy.weighting,
        starts,
        policy: Some(*policy),
    }
}

fn normalize_row(weights: &[u128]) -> Vec<f64> {
    let total: u128 = weights.iter().sum();
    if total == 0 {
        vec![0.0; weights.len()]
    } else {
        weights.iter().map(|&x| x as f64 / total as f64).collect()
    }
}

// The hop's link record; walks only cross existing records so this is total.
fn find_link<'a>(links: &'a [TemporalLink], g: &MultilayerStreamGraph, hop: &Hop) -> &'a TemporalLink {
    g.node_incident_links(hop.from.node)
        .iter()
        .map(|&i| &links[i as usize])
        .find(|l| l.involves(hop.from) && l.other(hop.from) == Some(hop.to) && l.time.contains(hop.time))
        .expect("hop follows a link record")
}

/// Deterministic per-node weighting: each link touching `v` that starts in
/// `[t0, t_max]` adds `t_max − start` to its layer(s); rows are normalized.
pub fn direct_exposure(g: &MultilayerStreamGraph, t0: Instant, t_max: Instant) -> ExposureMatrix {
    let layers = g.layers_in_use();
    let lookup = layers.clone();
    let col = column_index(&lookup);
    let nodes: Vec<NodeId> = g.nodes().collect();
    let links = g.links();
    let values = nodes
        .iter()
        .map(|&v| {
            let mut w = vec![0u128; layers.len()];
            for &i in g.node_incident_links(v) {
                let link = &links[i as usize];
                let t = link.time.start;
                if t < t0 || t > t_max {
                    continue;
                }
                let mut seen = BTreeSet::new();
                for end in [link.a, link.b] {
                    if end.node == v && seen.insert(end.layer) {
                        if let Some(j) = col(end.layer) {
                            w[j] += (t_max.0 - t.0) as u128;
                        }
                    }
                }
            }
            normalize_row(&w)
        })
        .collect();
    ExposureMatrix {
        node_labels: nodes.iter().map(|&u| g.node_name(u).to_string()).collect(),
        nodes,
        layer_labels: layers.iter().map(|&l| g.layer_label(l)).collect(),
        layers,
        values,
        weighting: ExposureWeighting::LinearHorizon,
        starts: StartScheme::Fixed(t0),
        policy: None,
    }
}

/// Per-layer coverage by walkers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub layers: Vec<LayerId>,
    pub labels: Vec<String>,
    /// Mean fraction of nodes touched through each layer's links per walk.
    pub raw: Vec<f64>,
    /// `raw` normalized to sum to 1 (all zero if nothing was covered).
    pub relative: Vec<f64>,
    pub walks: usize,
}

/// Walks start at a uniformly drawn node, at a time drawn by `starts`; every
/// endpoint of a crossed link counts as touched through that endpoint's layer.
pub fn layer_coverage(g: &MultilayerStreamGraph, starts: StartScheme, policy: &WalkPolicy) -> CoverageReport {
    layer_coverage_with(g, starts, policy, Execution::default())
}

pub fn layer_coverage_with(
    g: &MultilayerStreamGraph,
    starts: StartScheme,
    policy: &WalkPolicy,
    exec: Execution,
) -> CoverageReport {
    const CHUNK: usize = 256;
    let walker = Walker::new(g);
    let layers = g.layers_in_use();
    let lookup = layers.clone();
    let col = column_index(&lookup);
    let k = layers.len();
    let n = g.node_count();
    let links = g.links();
    let chunks = policy.num_walks.div_ceil(CHUNK);
    let partial = par::map_range(exec, chunks, |c| {
        let mut counts = vec![0u64; k];
        let mut touched: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); k];
        for walk in c * CHUNK..((c + 1) * CHUNK).min(policy.num_walks) {
            if n == 0 {
                break;
            }
            let mut rng = walk_rng(policy.seed, walk as u64);
            let u = NodeId(rng.random_range(0..n as u32));
            let Some(t) = walker.start_time(u, starts, &mut rng) else {
                continue;
            };
            let path = walker.walk(u, t, policy, &mut rng);
            touched.iter_mut().for_each(BTreeSet::clear);
            for hop in &path.hops {
                let link = find_link(links, g, hop);
                for end in [link.a, link.b] {
                    if let Some(j) = col(end.layer) {
                        touched[j].insert(end.node);
                    }
                }
            }
            for j in 0..k {
                counts[j] += touched[j].len() as u64;
            }
        }
        counts
    });
    let mut totals = vec![0u64; k];
    for counts in partial {
        for j in 0..k {
            totals[j] += counts[j];
        }
    }
    let denom = policy.num_walks as f64 * n.max(1) as f64;
    let raw: Vec<f64> = totals.iter().map(|&c| c as f64 / denom).collect();
    let sum: u64 = totals.iter().sum();
    let relative = totals
        .iter()
        .map(|&c| if sum == 0 { 0.0 } else { c as f64 / sum as f64 })
        .collect();
    CoverageReport {
        labels: layers.iter().map(|&l| g.layer_label(l)).collect(),
        layers,
        raw,
        relative,
        walks: policy.num_walks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Aspect, BuildMode, GraphBuilder};
    use crate::time::Interval;

    fn build(layers: &[&str], links: &[(i64, i64, &str, &str, &str)]) -> MultilayerStreamGraph {
        let aspect = Aspect::new("k", layers.iter().copied()).unwrap();
        let mut b = GraphBuilder::new(Interval::closed(0, 100), vec![aspect], BuildMode::AutoMaterialize).unwrap();
        for &(s, e, u, v, l) in links {
            b.add_link_named(Interval::closed(s, e), (u, &[l]), (v, &[l])).unwrap();
        }
        b.finish().unwrap()
    }

    fn nl(g: &MultilayerStreamGraph, u: &str, l: u32) -> NodeLayer {
        NodeLayer::new(g.node_id(u).unwrap(), LayerId(l))
    }

    #[test]
    fn gamma_condition() {
        let g = build(&["a"], &[(3, 3, "u", "v", "a"), (3, 3, "v", "w", "a")]);
        let path = TemporalPath {
            hops: vec![
                Hop {
                    time: Instant(3),
                    from: nl(&g, "u", 0),
                    to: nl(&g, "v", 0),
                },
                Hop {
                    time: Instant(3),
                    from: nl(&g, "v", 0),
                    to: nl(&g, "w", 0),
                },
            ],
        };
        assert!(is_valid_path(&g, &path, 0));
        assert!(!is_valid_path(&g, &path, 1));
        let broken = TemporalPath {
            hops: vec![path.hops[1], path.hops[0]],
        };
        assert!(!is_valid_path(&g, &broken, 0));
        let absent = TemporalPath {
            hops: vec![Hop {
                time: Instant(4),
                from: nl(&g, "u", 0),
                to: nl(&g, "v", 0),
            }],
        };
        assert!(!is_valid_path(&g, &absent, 0));
    }

    #[test]
    fn reachability_examples() {
        let g = build(&["a"], &[(2, 4, "u", "v", "a"), (1, 1, "v", "w", "a")]);
        let (u, v, w) = (nl(&g, "u", 0), nl(&g, "v", 0), nl(&g, "w", 0));
        assert!(reachable(&g, (Instant(0), u), (Instant(0), u), 3));
        assert!(reachable(&g, (Instant(0), u), (Instant(5), v), 1));
        assert!(!reachable(&g, (Instant(5), u), (Instant(9), v), 0));
        // v-w happens before u-v
        assert!(!reachable(&g, (Instant(0), u), (Instant(50), w), 0));
        assert!(reachable(&g, (Instant(0), w), (Instant(50), u), 1));
        assert!(!reachable(&g, (Instant(0), w), (Instant(50), u), 4));
        assert!(!reachable(&g, (Instant(6), u), (Instant(5), u), 0));
    }

    #[test]
    fn forced_single_choice() {
        let g = build(&["a"], &[(10, 12, "u", "v", "a")]);
        let policy = WalkPolicy::for_graph(&g, 1, 7);
        let u = g.node_id("u").unwrap();
        for seed in 0..20 {
            let p = sample_walk(&g, (Instant(0), u), &WalkPolicy { seed, ..policy });
            assert_eq!(p.hops.len(), 1);
            assert_eq!(p.hops[0].time, Instant(10));
            assert!(is_valid_path(&g, &p, 0));
        }
        let late = WalkPolicy {
            t_max: Instant(5),
            ..policy
        };
        assert!(sample_walk(&g, (Instant(6), u), &late).is_empty());
    }

    #[test]
    fn gamma_spacing_in_walks() {
        let g = build(
            &["a", "b"],
            &[(0, 50, "u", "v", "a"), (0, 50, "v", "w", "b"), (20, 60, "w", "u", "a")],
        );
        let policy = WalkPolicy {
            gamma: 3,
            max_hops: 40,
            ..WalkPolicy::for_graph(&g, 1, 1)
        };
        let walker = Walker::new(&g);
        for s in 0..50 {
            let mut rng = walk_rng(s, 0);
            let p = walker.walk(g.node_id("u").unwrap(), Instant(0), &policy, &mut rng);
            for w in p.hops.windows(2) {
                assert!(w[1].time.0 >= w[0].time.0 + 3);
                assert_eq!(w[0].to.node, w[1].from.node);
            }
            assert!(p.hops.len() <= 40);
        }
    }

    #[test]
    fn walks_are_reproducible() {
        let g = build(
            &["a", "b"],
            &[(0, 5, "u", "v", "a"), (3, 9, "v", "w", "b"), (4, 4, "u", "w", "a")],
        );
        let policy = WalkPolicy::for_graph(&g, 50, 99);
        let a = layer_exposure_with(&g, StartScheme::UniformPresence, &policy, Execution::Sequential);
        let b = layer_exposure_with(&g, StartScheme::UniformPresence, &policy, Execution::Parallel);
        assert_eq!(a, b);
        let c1 = layer_coverage_with(&g, StartScheme::UniformPresence, &policy, Execution::Sequential);
        let c2 = layer_coverage_with(&g, StartScheme::UniformPresence, &policy, Execution::Parallel);
        assert_eq!(c1, c2);
    }

    #[test]
    fn single_layer_indicator_exposure() {
        let g = build(&["a", "b"], &[(0, 5, "u", "v", "a"), (6, 9, "v", "w", "a")]);
        let x = layer_exposure(&g, StartScheme::Fixed(Instant(0)), &WalkPolicy::for_graph(&g, 20, 3));
        assert_eq!(x.layers, vec![LayerId(0)]);
        assert!(x.values.iter().all(|r| r[0] == 1.0));
    }

    #[test]
    fn dead_end_node_has_zero_row() {
        let g = build(&["a"], &[(0, 5, "u", "v", "a"), (0, 5, "w", "v", "a")]);
        let x = layer_exposure(&g, StartScheme::Fixed(Instant(6)), &WalkPolicy::for_graph(&g, 10, 3));
        assert!(x.values.iter().all(|r| r == &vec![0.0]));
    }

    #[test]
    fn linear_horizon_rows_sum_to_one() {
        let g = build(
            &["a", "b"],
            &[(0, 5, "u", "v", "a"), (10, 20, "v", "w", "b"), (30, 40, "w", "u", "a")],
        );
        let policy = WalkPolicy {
            weighting: ExposureWeighting::LinearHorizon,
            ..WalkPolicy::for_graph(&g, 40, 5)
        };
        let x = layer_exposure(&g, StartScheme::Fixed(Instant(0)), &policy);
        for row in &x.values {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{row:?}");
        }
        assert!(x.to_csv().starts_with("node,a,b\n"));
    }

    #[test]
    fn direct_exposure_weights() {
        let g = build(&["a", "b"], &[(0, 5, "u", "v", "a"), (50, 60, "u", "w", "b")]);
        let x = direct_exposure(&g, Instant(0), Instant(100));
        let u = x.nodes.iter().position(|&n| g.node_name(n) == "u").unwrap();
        // weights 100 on a and 50 on b
        assert!((x.values[u][0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((x.values[u][1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn coverage_single_layer() {
        let g = build(&["a", "b"], &[(0, 5, "u", "v", "a"), (6, 9, "v", "w", "a")]);
        let c = layer_coverage(&g, StartScheme::UniformPresence, &WalkPolicy::for_graph(&g, 100, 2));
        assert_eq!(c.relative, vec![1.0]);
    }

    #[test]
    fn sample_instant_in_presence() {
        let ts = TimeSet::from_intervals([Interval::closed(0, 2), Interval::closed(10, 12)]);
        let mut rng = walk_rng(1, 1);
        for _ in 0..100 {
            let t = sample_instant(&ts, &mut rng).unwrap();
            assert!(ts.contains(t));
        }
        let points = TimeSet::from_intervals([Interval::point(4), Interval::point(7)]);
        let t = sample_instant(&points, &mut rng).unwrap();
        assert!(t == Instant(4) || t == Instant(7));
        assert!(sample_instant(&TimeSet::empty(), &mut rng).is_none());
    }

    #[test]
    fn policy_checks() {
        let g = build(&["a"], &[(0, 5, "u", "v", "a")]);
        let p = WalkPolicy::for_graph(&g, 1, 0);
        assert!(p.check(&g).is_ok());
        assert!(WalkPolicy { num_walks: 0, ..p }.check(&g).is_err());
        assert!(WalkPolicy {
            t_max: Instant(1000),
            ..p
        }
        .check(&g)
        .is_err());
        assert!(WalkPolicy { gamma: -1, ..p }.check(&g).is_err());
    }
}
