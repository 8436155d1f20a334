//! Number of links, degrees and the density family.
//!
//! Densities are kept as exact tick ratios ([`Density`]) and only turned into
//! floats at the end. An empty denominator yields zero with a flag rather than
//! an error, since daily windows routinely contain empty nights.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{LayerId, ModelError, MultilayerStreamGraph, NodeId, NodeLayer, TemporalLink};
use crate::output::fmt_num;
use crate::par::{self, Execution};
use crate::projections::{interlayer_stream, BipartiteStreamGraph, ProjectionError, StaticGraph, StreamGraph};
use crate::time::{Interval, TimeSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("study interval {0} has zero length")]
    ZeroStudyInterval(Interval),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
}

/// An exact ratio of tick counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Density {
    pub numerator: i128,
    pub denominator: i128,
}

impl Density {
    pub fn new(numerator: i128, denominator: i128) -> Self {
        Density { numerator, denominator }
    }

    /// True when there was nothing to divide by; [`value`](Self::value) is then 0.
    pub fn empty_denominator(&self) -> bool {
        self.denominator == 0
    }

    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }

    /// Exact equality of the two ratios.
    pub fn same_ratio(&self, other: &Density) -> bool {
        match (self.denominator == 0, other.denominator == 0) {
            (true, true) => true,
            (false, false) => self.numerator * other.denominator == other.numerator * self.denominator,
            (true, false) => other.numerator == 0,
            (false, true) => self.numerator == 0,
        }
    }
}

/// Degree of a node or node-layer, in both the record-count and duration senses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeReport {
    pub count_degree: usize,
    /// Incident link duration over `|T|`.
    pub duration_degree: f64,
    pub duration_ticks: i64,
}

/// Density of a static graph; `degenerate` is set when fewer than two vertices exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphDensity {
    pub value: f64,
    pub degenerate: bool,
}

/// Which node-layer pairs count in the denominator of [`density_mls`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenominatorMode {
    #[default]
    AllPairs,
    /// Only pairs on the same layer.
    IntralayerPairs,
    /// Only pairs whose two layers share at least one link.
    LinkedLayerPairs,
}

impl std::str::FromStr for DenominatorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all-pairs" | "all" => Ok(DenominatorMode::AllPairs),
            "intralayer-pairs" | "intralayer" => Ok(DenominatorMode::IntralayerPairs),
            "linked-layer-pairs" | "linked" => Ok(DenominatorMode::LinkedLayerPairs),
            other => Err(format!("unknown denominator mode {other:?}")),
        }
    }
}

/// Total link duration divided by `|T|`.
pub fn number_of_links<'a, I>(links: I, study: Interval) -> Result<Density, MeasureError>
where
    I: IntoIterator<Item = &'a TemporalLink>,
{
    if study.length() == 0 {
        return Err(MeasureError::ZeroStudyInterval(study));
    }
    let total: i128 = links.into_iter().map(|l| l.duration() as i128).sum();
    Ok(Density::new(total, study.length() as i128))
}

fn degree_of<'a, I>(g: &MultilayerStreamGraph, incident: I) -> Result<DegreeReport, MeasureError>
where
    I: IntoIterator<Item = &'a TemporalLink>,
{
    let links: Vec<&TemporalLink> = incident.into_iter().collect();
    let study = g.study_interval();
    let duration_ticks: i64 = links.iter().map(|l| l.duration()).sum();
    let duration_degree = if study.length() == 0 {
        0.0
    } else {
        number_of_links(links.iter().copied(), study)?.value()
    };
    Ok(DegreeReport {
        count_degree: links.len(),
        duration_degree,
        duration_ticks,
    })
}

/// Degree of a node: every link record touching one of its node-layers.
pub fn degree(g: &MultilayerStreamGraph, u: NodeId) -> Result<DegreeReport, MeasureError> {
    if u.0 as usize >= g.node_count() {
        return Err(ModelError::UnknownNode(u.0.to_string()).into());
    }
    let links = g.links();
    degree_of(g, g.node_incident_links(u).iter().map(|&i| &links[i as usize]))
}

pub fn degree_node_layer(g: &MultilayerStreamGraph, nl: NodeLayer) -> Result<DegreeReport, MeasureError> {
    g.node_layer_presence(nl)?;
    let links = g.links();
    degree_of(
        g,
        g.node_incident_links(nl.node)
            .iter()
            .map(|&i| &links[i as usize])
            .filter(|l| l.involves(nl)),
    )
}

/// `2|E| / (n(n-1))`.
pub fn density_graph<G: StaticGraph + ?Sized>(graph: &G) -> GraphDensity {
    let n = graph.vertex_count();
    if n < 2 {
        return GraphDensity {
            value: 0.0,
            degenerate: true,
        };
    }
    GraphDensity {
        value: 2.0 * graph.edge_count() as f64 / (n as f64 * (n as f64 - 1.0)),
        degenerate: false,
    }
}

/// `Σ_e |T_e| / Σ_{u,v} |T_u ∩ T_v|` over unordered node pairs.
pub fn density_stream<N: Ord + Copy + Sync>(s: &StreamGraph<N>) -> Density {
    let numerator: i128 = s.links.values().map(|ts| ts.measure() as i128).sum();
    let presence: Vec<&TimeSet> = s.presence.values().collect();
    let mut denominator: i128 = 0;
    for (i, a) in presence.iter().enumerate() {
        for b in &presence[i + 1..] {
            denominator += a.intersection_measure(b) as i128;
        }
    }
    Density::new(numerator, denominator)
}

/// Density of an interlayer stream. Between two distinct layers only
/// cross-side pairs are admissible; on one layer it is [`density_stream`].
pub fn density_bipartite(s: &BipartiteStreamGraph) -> Density {
    if s.is_intralayer() {
        return density_stream(&s.stream);
    }
    let numerator: i128 = s.stream.links.values().map(|ts| ts.measure() as i128).sum();
    let (left, right) = s.sides();
    let mut denominator: i128 = 0;
    for a in &left {
        for b in &right {
            if a == b {
                continue;
            }
            denominator += s.stream.presence[a].intersection_measure(&s.stream.presence[b]) as i128;
        }
    }
    Density::new(numerator, denominator)
}

/// Density of the whole multilayer stream graph.
pub fn density_mls(g: &MultilayerStreamGraph, mode: DenominatorMode) -> Density {
    density_mls_with(g, mode, Execution::default())
}

pub fn density_mls_with(g: &MultilayerStreamGraph, mode: DenominatorMode, exec: Execution) -> Density {
    let linked_layers: std::collections::BTreeSet<(LayerId, LayerId)> =
        g.links().iter().map(|l| ordered(l.a.layer, l.b.layer)).collect();
    let admissible = |a: NodeLayer, b: NodeLayer| match mode {
        DenominatorMode::AllPairs => true,
        DenominatorMode::IntralayerPairs => a.layer == b.layer,
        DenominatorMode::LinkedLayerPairs => linked_layers.contains(&ordered(a.layer, b.layer)),
    };
    let numerator: i128 = g
        .linked_pairs()
        .iter()
        .filter(|((a, b), _)| admissible(*a, *b))
        .map(|(_, ts)| ts.measure() as i128)
        .sum();
    let entries: Vec<(NodeLayer, &TimeSet)> = g.node_layers().iter().map(|(k, v)| (*k, v)).collect();
    let partial = par::map_range(exec, entries.len(), |i| {
        let (a, ta) = entries[i];
        entries[i + 1..]
            .iter()
            .filter(|(b, _)| admissible(a, *b))
            .map(|(_, tb)| ta.intersection_measure(tb) as i128)
            .sum::<i128>()
    });
    Density::new(numerator, partial.into_iter().sum())
}

fn ordered(a: LayerId, b: LayerId) -> (LayerId, LayerId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `δ(S_M(α, β))`.
pub fn interlayer_density(g: &MultilayerStreamGraph, alpha: LayerId, beta: LayerId) -> Result<Density, MeasureError> {
    Ok(density_bipartite(&interlayer_stream(g, alpha, beta)?))
}

/// Symmetric matrix of interlayer densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    pub layers: Vec<LayerId>,
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub exact: Vec<Vec<Density>>,
}

impl DensityMatrix {
    pub fn from_values(labels: Vec<String>, values: Vec<Vec<f64>>) -> Self {
        let layers = (0..labels.len() as u32).map(LayerId).collect();
        DensityMatrix {
            layers,
            labels,
            exact: Vec::new(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.len();
        (0..k).all(|i| (0..k).all(|j| self.values[i][j] == self.values[j][i]))
    }

    /// Header row and column of layer labels, then the k×k values.
    pub fn to_csv(&self) -> String {
        self.render(fmt_num)
    }

    /// Same layout with `|log10(x)|`; zeros are written as `inf`.
    pub fn to_log_csv(&self) -> String {
        self.render(|x| {
            if x == 0.0 {
                "inf".to_string()
            } else {
                fmt_num(x.log10().abs())
            }
        })
    }

    fn render<F: Fn(f64) -> String>(&self, cell: F) -> String {
        let mut out = String::from("layer");
        for l in &self.labels {
            out.push(',');
            out.push_str(&crate::output::csv_field(l));
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.values) {
            out.push_str(&crate::output::csv_field(label));
            for &x in row {
                let _ = write!(out, ",{}", cell(x));
            }
            out.push('\n');
        }
        out
    }
}

pub fn density_matrix(g: &MultilayerStreamGraph, layers: &[LayerId]) -> Result<DensityMatrix, MeasureError> {
    density_matrix_with(g, layers, Execution::default())
}

/// Assembles `Δ` over the given layers; pairs are computed in parallel and
/// assembled in a fixed order.
pub fn density_matrix_with(
    g: &MultilayerStreamGraph,
    layers: &[LayerId],
    exec: Execution,
) -> Result<DensityMatrix, MeasureError> {
    let k = layers.len();
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let results = par::map(exec, &pairs, |&(i, j)| interlayer_density(g, layers[i], layers[j]));
    let mut exact = vec![vec![Density::default(); k]; k];
    for (&(i, j), d) in pairs.iter().zip(results) {
        let d = d?;
        exact[i][j] = d;
        exact[j][i] = d;
    }
    let values = exact
        .iter()
        .map(|row| row.iter().map(Density::value).collect())
        .collect();
    Ok(DensityMatrix {
        layers: layers.to_vec(),
        labels: layers.iter().map(|&l| g.layer_label(l)).collect(),
        values,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Aspect, BuildMode, GraphBuilder};
    use crate::projections::{aggregated_stream, intralayer_stream, SimpleGraph};
    use std::collections::BTreeMap;

    #[test]
    fn number_of_links_formula() {
        let l = TemporalLink::new(
            Interval::closed(0, 5),
            NodeLayer::new(NodeId(0), LayerId(0)),
            NodeLayer::new(NodeId(1), LayerId(0)),
        )
        .unwrap();
        assert_eq!(number_of_links([&l], Interval::closed(0, 10)).unwrap().value(), 0.5);
        assert_eq!(number_of_links([], Interval::closed(0, 10)).unwrap().value(), 0.0);
        assert!(matches!(
            number_of_links([&l], Interval::closed(3, 3)),
            Err(MeasureError::ZeroStudyInterval(_))
        ));
    }

    #[test]
    fn graph_density_examples() {
        // monkey aggregate: 4 nodes, 4 edges
        let g = SimpleGraph::new(0..4u32, [(0, 1), (0, 2), (0, 3), (2, 3)]);
        let d = density_graph(&g);
        assert_eq!(d.value, 2.0 / 3.0);
        assert!(!d.degenerate);
        let complete = SimpleGraph::new(0..5u32, (0..5u32).flat_map(|i| (i + 1..5).map(move |j| (i, j))));
        assert_eq!(density_graph(&complete).value, 1.0);
        assert_eq!(density_graph(&SimpleGraph::new(0..5u32, [])).value, 0.0);
        let single = density_graph(&SimpleGraph::<u32>::new([1], []));
        assert!(single.degenerate);
        assert_eq!(single.value, 0.0);
    }

    #[test]
    fn stream_density_examples() {
        let full = TimeSet::from_interval(Interval::closed(0, 10));
        let s = StreamGraph {
            study: full.clone(),
            presence: BTreeMap::from([(0u32, full.clone()), (1, full.clone())]),
            links: BTreeMap::from([((0, 1), TimeSet::from_interval(Interval::closed(0, 5)))]),
        };
        let d = density_stream(&s);
        assert_eq!((d.numerator, d.denominator), (5, 10));
        assert_eq!(d.value(), 0.5);

        let apart = StreamGraph {
            study: full.clone(),
            presence: BTreeMap::from([
                (0u32, TimeSet::from_interval(Interval::closed(0, 4))),
                (1, TimeSet::from_interval(Interval::closed(5, 10))),
            ]),
            links: BTreeMap::new(),
        };
        let d = density_stream(&apart);
        assert!(d.empty_denominator());
        assert_eq!(d.value(), 0.0);
    }

    fn graph(aspect: Aspect, links: &[(i64, i64, &str, &str, &str, &str)]) -> MultilayerStreamGraph {
        let mut b = GraphBuilder::new(Interval::closed(0, 10), vec![aspect], BuildMode::AutoMaterialize).unwrap();
        for &(s, e, u, lu, v, lv) in links {
            b.add_link_named(Interval::closed(s, e), (u, &[lu]), (v, &[lv]))
                .unwrap();
        }
        b.finish().unwrap()
    }

    #[test]
    fn degrees_count_and_duration() {
        let g = graph(
            Aspect::new("k", ["a", "b"]).unwrap(),
            &[
                (0, 2, "u", "a", "v", "a"),
                (3, 4, "u", "b", "v", "b"),
                (5, 10, "v", "a", "w", "a"),
            ],
        );
        let u = g.node_id("u").unwrap();
        let d = degree(&g, u).unwrap();
        assert_eq!(d.count_degree, 2);
        assert_eq!(d.duration_ticks, 3);
        assert!((d.duration_degree - 0.3).abs() < 1e-15);
        let dl = degree_node_layer(&g, NodeLayer::new(u, LayerId(1))).unwrap();
        assert_eq!(dl.count_degree, 1);
        assert!(degree(&g, NodeId(42)).is_err());
        assert!(degree_node_layer(&g, NodeLayer::new(NodeId(2), LayerId(1))).is_err());
    }

    #[test]
    fn seven_incident_records() {
        let aspect = Aspect::new("k", ["a"]).unwrap();
        let mut b = GraphBuilder::new(Interval::closed(0, 20), vec![aspect], BuildMode::AutoMaterialize).unwrap();
        for (i, other) in ["f1", "f2", "m2", "f1", "f2", "m2", "f1"].iter().enumerate() {
            let t = 2 * i as i64;
            b.add_link_named(Interval::closed(t, t + 1), ("m1", &["a"]), (other, &["a"]))
                .unwrap();
        }
        let g = b.finish().unwrap();
        assert_eq!(degree(&g, g.node_id("m1").unwrap()).unwrap().count_degree, 7);
    }

    #[test]
    fn isolated_node_has_zero_degree() {
        let aspect = Aspect::new("k", ["a"]).unwrap();
        let mut b = GraphBuilder::new(Interval::closed(0, 20), vec![aspect], BuildMode::Strict).unwrap();
        let u = b.node("u");
        b.add_presence(u, LayerId(0), Interval::closed(0, 3)).unwrap();
        let g = b.finish().unwrap();
        let d = degree(&g, u).unwrap();
        assert_eq!((d.count_degree, d.duration_degree), (0, 0.0));
    }

    #[test]
    fn mls_density_reductions() {
        let single = graph(
            Aspect::new("k", ["a"]).unwrap(),
            &[(0, 2, "u", "a", "v", "a"), (1, 6, "v", "a", "w", "a")],
        );
        let intra = intralayer_stream(&single, LayerId(0)).unwrap();
        assert_eq!(density_mls(&single, DenominatorMode::AllPairs), density_stream(&intra));
        assert_eq!(
            density_matrix(&single, &[LayerId(0)]).unwrap().exact[0][0],
            density_stream(&intra)
        );

        // fully co-present, fully linked 2×2 node-layers
        let aspect = Aspect::new("k", ["a", "b"]).unwrap();
        let mut b = GraphBuilder::new(Interval::closed(0, 10), vec![aspect], BuildMode::AutoMaterialize).unwrap();
        let names = [("u", "a"), ("u", "b"), ("v", "a"), ("v", "b")];
        for i in 0..4 {
            for j in i + 1..4 {
                b.add_link_named(
                    Interval::closed(0, 10),
                    (names[i].0, &[names[i].1]),
                    (names[j].0, &[names[j].1]),
                )
                .unwrap();
            }
        }
        let full = b.finish().unwrap();
        assert_eq!(density_mls(&full, DenominatorMode::AllPairs).value(), 1.0);
        assert_eq!(density_mls(&full, DenominatorMode::IntralayerPairs).value(), 1.0);
    }

    #[test]
    fn denominator_modes_differ() {
        let g = graph(
            Aspect::new("k", ["a", "b"]).unwrap(),
            &[(0, 10, "u", "a", "v", "a"), (0, 10, "u", "b", "w", "b")],
        );
        let all = density_mls(&g, DenominatorMode::AllPairs);
        let intra = density_mls(&g, DenominatorMode::IntralayerPairs);
        let linked = density_mls(&g, DenominatorMode::LinkedLayerPairs);
        // 4 node-layers all present over [0,10]: 6 pairs, 2 linked
        assert_eq!((all.numerator, all.denominator), (20, 60));
        assert_eq!((intra.numerator, intra.denominator), (20, 20));
        assert_eq!(intra, linked);
        assert_eq!(
            "intralayer-pairs".parse::<DenominatorMode>().unwrap(),
            DenominatorMode::IntralayerPairs
        );
        assert!("x".parse::<DenominatorMode>().is_err());
    }

    #[test]
    fn interlayer_density_and_matrix() {
        let g = graph(
            Aspect::new("sex", ["M", "F"]).unwrap(),
            &[
                (0, 10, "m1", "M", "m2", "M"),
                (0, 5, "f1", "F", "f2", "F"),
                (0, 2, "m1", "M", "f1", "F"),
            ],
        );
        let (m, f) = (LayerId(0), LayerId(1));
        let cross = interlayer_density(&g, m, f).unwrap();
        // cross pairs: m1-f1, m1-f2, m2-f1, m2-f2 over their co-presence
        assert_eq!(cross.numerator, 2);
        let matrix = density_matrix(&g, &[m, f]).unwrap();
        assert!(matrix.is_symmetric());
        assert!(matrix.values.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
        assert_eq!(matrix.exact[0][1], cross);
        assert_eq!(matrix.values[0][0], 1.0);
        let seq = density_matrix_with(&g, &[m, f], Execution::Sequential).unwrap();
        assert_eq!(seq, matrix);
        let csv = matrix.to_csv();
        assert!(csv.starts_with("layer,M,F\nM,1,"));
        let none = graph(
            Aspect::new("sex", ["M", "F"]).unwrap(),
            &[(0, 10, "m1", "M", "m2", "M"), (0, 5, "f1", "F", "f2", "F")],
        );
        assert_eq!(interlayer_density(&none, m, f).unwrap().value(), 0.0);
        assert!(density_matrix(&none, &[m, f]).unwrap().to_log_csv().contains("inf"));
    }

    #[test]
    fn aggregated_density_in_unit_range() {
        let g = graph(
            Aspect::new("k", ["a", "b"]).unwrap(),
            &[(0, 4, "u", "a", "v", "a"), (2, 8, "u", "b", "v", "b")],
        );
        let d = density_stream(&aggregated_stream(&g));
        assert_eq!((d.numerator, d.denominator), (8, 8));
    }
}
