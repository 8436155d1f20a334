mod common;

use common::corpus;
use mlstream::model::{Aspect, BuildMode, GraphBuilder};
use mlstream::synthetic::RandomSpec;
use mlstream::walks::TemporalPath;
use mlstream::walks::{
    direct_exposure, layer_coverage_with, layer_exposure_with, walk_rng, ExposureWeighting, StartScheme, WalkPolicy,
    Walker,
};
use mlstream::{Execution, Instant, Interval, LayerId, MultilayerStreamGraph, NodeId};
use std::collections::BTreeSet;

/// One complete walk: its probability and the crossed `(link, hop time)` pairs.
struct Leaf {
    p: f64,
    hops: Vec<(usize, i64)>,
}

/// Exhaustive walk tree: from `u` ready at `ready`, every link touching `u`
/// that can still be crossed by `t_max` is equally likely, except the one
/// just crossed.
fn walk_tree(g: &MultilayerStreamGraph, u: NodeId, ready: i64, policy: &WalkPolicy) -> Vec<Leaf> {
    fn rec(
        g: &MultilayerStreamGraph,
        u: NodeId,
        ready: i64,
        prev: Option<usize>,
        p: f64,
        hops: &mut Vec<(usize, i64)>,
        policy: &WalkPolicy,
        out: &mut Vec<Leaf>,
    ) {
        let t_max = policy.t_max.0;
        let options: Vec<usize> = g
            .links()
            .iter()
            .enumerate()
            .filter(|(i, l)| {
                Some(*i) != prev
                    && (l.a.node == u || l.b.node == u)
                    && ready.max(l.time.start.0) <= l.time.end.0.min(t_max)
            })
            .map(|(i, _)| i)
            .collect();
        if options.is_empty() || hops.len() == policy.max_hops {
            out.push(Leaf { p, hops: hops.clone() });
            return;
        }
        let q = p / options.len() as f64;
        for i in options {
            let l = &g.links()[i];
            let h = ready.max(l.time.start.0);
            let next = if l.a.node == u { l.b.node } else { l.a.node };
            hops.push((i, h));
            rec(g, next, h + policy.gamma, Some(i), q, hops, policy, out);
            hops.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, u, ready, None, 1.0, &mut Vec::new(), policy, &mut out);
    out
}

/// Node-level γ-chaining: each hop is a link at its time, consecutive hops
/// share a node and are at least γ apart.
fn node_chained(g: &MultilayerStreamGraph, path: &TemporalPath, gamma: i64) -> bool {
    path.hops.iter().all(|h| {
        g.links()
            .iter()
            .any(|l| l.time.contains(h.time) && ((l.a, l.b) == (h.from, h.to) || (l.b, l.a) == (h.from, h.to)))
    }) && path
        .hops
        .windows(2)
        .all(|w| w[0].to.node == w[1].from.node && w[1].time.0 >= w[0].time.0 + gamma)
}

fn layer_col(g: &MultilayerStreamGraph) -> (Vec<LayerId>, impl Fn(LayerId) -> usize) {
    let layers = g.layers_in_use();
    let copy = layers.clone();
    (layers, move |l| copy.iter().position(|&x| x == l).unwrap())
}

fn policy(g: &MultilayerStreamGraph, walks: usize, seed: u64, weighting: ExposureWeighting) -> WalkPolicy {
    WalkPolicy {
        gamma: 1,
        weighting,
        max_hops: 4,
        ..WalkPolicy::for_graph(g, walks, seed)
    }
}

fn tree_spec() -> RandomSpec {
    RandomSpec {
        max_nodes: 4,
        max_layers: 3,
        span: 8,
        max_links: 6,
        interlayer: true,
    }
}

#[test]
fn first_hop_is_uniform_over_three_choices() {
    let aspect = Aspect::new("k", ["a"]).unwrap();
    let mut b = GraphBuilder::new(Interval::closed(0, 100), vec![aspect], BuildMode::AutoMaterialize).unwrap();
    for v in ["v1", "v2", "v3"] {
        b.add_link_named(Interval::closed(5, 5), ("u", &["a"]), (v, &["a"]))
            .unwrap();
    }
    let g = b.finish().unwrap();
    let walker = Walker::new(&g);
    let p = WalkPolicy::for_graph(&g, 1, 0);
    let u = g.node_id("u").unwrap();
    let n = 10_000usize;
    let mut counts = [0usize; 3];
    for i in 0..n {
        let path = walker.walk(u, Instant(0), &p, &mut walk_rng(77, i as u64));
        let to = g.node_name(path.hops[0].to.node);
        counts[["v1", "v2", "v3"].iter().position(|x| *x == to).unwrap()] += 1;
    }
    let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 / 3.0).abs() < 3.0 * sigma, "{counts:?}");
    }
}

#[test]
fn coverage_matches_walk_tree() {
    let n_walks = 20_000;
    let mut compared = 0;
    for g in corpus(40, 41, &tree_spec()) {
        let (layers, col) = layer_col(&g);
        if layers.is_empty() {
            continue;
        }
        let pol = policy(&g, n_walks, 5, ExposureWeighting::Indicator);
        let t0 = g.study_interval().start;
        let n = g.node_count() as f64;
        // per-walk coverage value of each layer: first and second moments
        let mut m1 = vec![0.0; layers.len()];
        let mut m2 = vec![0.0; layers.len()];
        for u in g.nodes() {
            for leaf in walk_tree(&g, u, t0.0, &pol) {
                let mut touched = vec![BTreeSet::new(); layers.len()];
                for &(i, _) in &leaf.hops {
                    let l = &g.links()[i];
                    for e in [l.a, l.b] {
                        touched[col(e.layer)].insert(e.node);
                    }
                }
                for j in 0..layers.len() {
                    let x = touched[j].len() as f64 / n;
                    m1[j] += leaf.p / n * x;
                    m2[j] += leaf.p / n * x * x;
                }
            }
        }
        let c = layer_coverage_with(&g, StartScheme::Fixed(t0), &pol, Execution::default());
        for j in 0..layers.len() {
            let sigma = ((m2[j] - m1[j] * m1[j]).max(0.0) / n_walks as f64).sqrt();
            assert!(
                (c.raw[j] - m1[j]).abs() <= 5.0 * sigma + 1e-12,
                "layer {j}: {} vs {}",
                c.raw[j],
                m1[j]
            );
        }
        compared += 1;
    }
    assert!(compared > 20);
}

#[test]
fn exposure_matches_walk_tree() {
    let n_walks = 5_000;
    for g in corpus(40, 42, &tree_spec()) {
        let (layers, col) = layer_col(&g);
        if layers.is_empty() {
            continue;
        }
        let t0 = g.study_interval().start;
        let ind = policy(&g, n_walks, 6, ExposureWeighting::Indicator);
        let lin = policy(&g, n_walks, 6, ExposureWeighting::LinearHorizon);
        let xi = layer_exposure_with(&g, StartScheme::Fixed(t0), &ind, Execution::default());
        let xl = layer_exposure_with(&g, StartScheme::Fixed(t0), &lin, Execution::default());
        for (r, u) in g.nodes().enumerate() {
            let leaves = walk_tree(&g, u, t0.0, &ind);
            let k = layers.len();
            let mut p = vec![0.0; k];
            // per-walk horizon weights, for the ratio estimator
            let mut weights: Vec<(f64, Vec<f64>)> = Vec::new();
            for leaf in &leaves {
                let mut hit = vec![false; k];
                let mut w = vec![0.0; k];
                for &(i, h) in &leaf.hops {
                    let l = &g.links()[i];
                    let ls: BTreeSet<usize> = [col(l.a.layer), col(l.b.layer)].into();
                    for j in ls {
                        hit[j] = true;
                        w[j] += (lin.t_max.0 - h) as f64;
                    }
                }
                for j in 0..k {
                    p[j] += leaf.p * hit[j] as u8 as f64;
                }
                weights.push((leaf.p, w));
            }
            for j in 0..k {
                let sigma = (p[j] * (1.0 - p[j]) / n_walks as f64).sqrt();
                assert!(
                    (xi.values[r][j] - p[j]).abs() <= 5.0 * sigma + 1e-12,
                    "{} vs {}",
                    xi.values[r][j],
                    p[j]
                );
            }
            let mean: Vec<f64> = (0..k).map(|j| weights.iter().map(|(q, w)| q * w[j]).sum()).collect();
            let total: f64 = mean.iter().sum();
            if total == 0.0 {
                assert!(xl.values[r].iter().all(|&x| x == 0.0));
                continue;
            }
            for j in 0..k {
                let ratio = mean[j] / total;
                // delta method for a ratio of means
                let var: f64 = weights
                    .iter()
                    .map(|(q, w)| q * (w[j] - ratio * w.iter().sum::<f64>()).powi(2))
                    .sum::<f64>()
                    / (n_walks as f64 * total * total);
                assert!(
                    (xl.values[r][j] - ratio).abs() <= 6.0 * var.sqrt() + 1e-9,
                    "{} vs {ratio}",
                    xl.values[r][j]
                );
            }
        }
    }
}

#[test]
fn two_layer_exact_exposure() {
    // u meets v on layer a at 10 and w on layer b at 20; from v nothing follows
    let aspect = Aspect::new("k", ["a", "b"]).unwrap();
    let mut b = GraphBuilder::new(Interval::closed(0, 100), vec![aspect], BuildMode::AutoMaterialize).unwrap();
    b.add_link_named(Interval::closed(10, 10), ("u", &["a"]), ("v", &["a"]))
        .unwrap();
    b.add_link_named(Interval::closed(20, 20), ("u", &["b"]), ("w", &["b"]))
        .unwrap();
    let g = b.finish().unwrap();
    let u = g.node_id("u").unwrap().0 as usize;
    let n = 20_000;
    let ind = policy(&g, n, 8, ExposureWeighting::Indicator);
    let x = layer_exposure_with(&g, StartScheme::Fixed(Instant(0)), &ind, Execution::default());
    // one hop either way: v and w have no other link
    let sigma = (0.25f64 / n as f64).sqrt();
    assert!((x.values[u][0] - 0.5).abs() < 5.0 * sigma);
    assert!((x.values[u][1] - 0.5).abs() < 5.0 * sigma);
    assert!((x.values[u][0] + x.values[u][1] - 1.0).abs() < 1e-12);
    // the horizon weighting is deterministic here: (100-10) against (100-20)
    let lin = policy(&g, n, 8, ExposureWeighting::LinearHorizon);
    let xl = layer_exposure_with(&g, StartScheme::Fixed(Instant(0)), &lin, Execution::default());
    let hits_a = x.values[u][0] * n as f64;
    let want = 90.0 * hits_a / (90.0 * hits_a + 80.0 * (n as f64 - hits_a));
    assert!((xl.values[u][0] - want).abs() < 1e-12);
    // the deterministic per-node weighting
    let d = direct_exposure(&g, Instant(0), Instant(100));
    assert!((d.values[u][0] - 90.0 / 170.0).abs() < 1e-15);
    assert!((d.values[u][1] - 80.0 / 170.0).abs() < 1e-15);
}

#[test]
fn sampled_walks_are_gamma_paths() {
    for g in corpus(
        100,
        43,
        &RandomSpec {
            max_nodes: 6,
            ..RandomSpec::default()
        },
    ) {
        let walker = Walker::new(&g);
        for gamma in [0, 1, 3] {
            let pol = WalkPolicy {
                gamma,
                max_hops: 50,
                ..WalkPolicy::for_graph(&g, 1, 0)
            };
            for u in g.nodes() {
                for i in 0..5u64 {
                    let mut rng = walk_rng(9, i);
                    let Some(t) = walker.start_time(u, StartScheme::UniformPresence, &mut rng) else {
                        continue;
                    };
                    let path = walker.walk(u, t, &pol, &mut rng);
                    assert!(node_chained(&g, &path, gamma));
                    assert!(path.hops.iter().all(|h| h.time >= t && h.time <= pol.t_max));
                    assert!(path.hops.first().is_none_or(|h| h.from.node == u));
                }
            }
        }
    }
}

#[test]
fn parallel_and_sequential_are_identical() {
    for g in corpus(
        30,
        44,
        &RandomSpec {
            max_nodes: 6,
            ..RandomSpec::default()
        },
    ) {
        for weighting in [ExposureWeighting::Indicator, ExposureWeighting::LinearHorizon] {
            let pol = WalkPolicy {
                weighting,
                max_hops: 100,
                ..WalkPolicy::for_graph(&g, 300, 12)
            };
            let a = layer_exposure_with(&g, StartScheme::UniformPresence, &pol, Execution::Sequential);
            let b = layer_exposure_with(&g, StartScheme::UniformPresence, &pol, Execution::Parallel);
            assert_eq!(a, b);
            let pol = WalkPolicy { num_walks: 1000, ..pol };
            let a = layer_coverage_with(&g, StartScheme::UniformPresence, &pol, Execution::Sequential);
            let b = layer_coverage_with(&g, StartScheme::UniformPresence, &pol, Execution::Parallel);
            assert_eq!(a, b);
        }
    }
}

#[test]
fn seeds_reproduce_and_differ() {
    let graphs = corpus(30, 45, &RandomSpec::default());
    let g = graphs.iter().max_by_key(|g| g.links().len()).unwrap();
    let run = |seed| {
        layer_exposure_with(
            g,
            StartScheme::UniformPresence,
            &WalkPolicy::for_graph(g, 200, seed),
            Execution::default(),
        )
    };
    assert_eq!(run(1), run(1));
    assert_ne!(run(1).values, run(2).values);
}

#[test]
fn single_layer_owning_all_links_covers_alone() {
    let aspect = Aspect::new("k", ["a", "b"]).unwrap();
    let mut b = GraphBuilder::new(Interval::closed(0, 50), vec![aspect], BuildMode::AutoMaterialize).unwrap();
    b.add_link_named(Interval::closed(1, 30), ("u", &["a"]), ("v", &["a"]))
        .unwrap();
    b.add_link_named(Interval::closed(5, 40), ("v", &["a"]), ("w", &["a"]))
        .unwrap();
    let w = b.node("w");
    let lb = b.layer(&["b"]).unwrap();
    b.add_presence(w, lb, Interval::closed(0, 50)).unwrap();
    let g = b.finish().unwrap();
    let c = layer_coverage_with(
        &g,
        StartScheme::UniformPresence,
        &WalkPolicy::for_graph(&g, 500, 1),
        Execution::default(),
    );
    assert_eq!(c.relative, vec![1.0, 0.0]);
}
