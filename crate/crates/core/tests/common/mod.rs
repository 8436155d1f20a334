//! Brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mlstream::measures::{
    degree, degree_node_layer, density_matrix, density_mls, density_stream, interlayer_density, number_of_links,
    DenominatorMode, Density,
};
use mlstream::projections::{aggregated_stream, intralayer_stream};
use mlstream::synthetic::{random_graph, RandomSpec};
use mlstream::walks::Hop;
use mlstream::{Instant, Interval, LayerId, MultilayerStreamGraph, NodeId, NodeLayer, TimeSet};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Membership on a half-tick grid: position `2(t - base)` is the instant `t`,
/// position `2(t - base) + 1` the open cell `(t, t + 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bits {
    pub base: i64,
    pub v: Vec<bool>,
}

impl Bits {
    pub fn empty(base: i64, end: i64) -> Self {
        Bits {
            base,
            v: vec![false; (2 * (end - base) + 1) as usize],
        }
    }

    pub fn add(&mut self, iv: Interval) {
        let lo = 2 * (iv.start.0 - self.base);
        let hi = 2 * (iv.end.0 - self.base);
        for p in lo..=hi {
            self.v[p as usize] = true;
        }
    }

    pub fn of(base: i64, end: i64, ts: &TimeSet) -> Self {
        let mut b = Bits::empty(base, end);
        for iv in ts.intervals() {
            b.add(*iv);
        }
        b
    }

    pub fn and(&self, o: &Bits) -> Bits {
        Bits {
            base: self.base,
            v: self.v.iter().zip(&o.v).map(|(a, b)| *a && *b).collect(),
        }
    }

    pub fn or(&self, o: &Bits) -> Bits {
        Bits {
            base: self.base,
            v: self.v.iter().zip(&o.v).map(|(a, b)| *a || *b).collect(),
        }
    }

    /// Number of covered unit cells.
    pub fn cells(&self) -> i64 {
        self.v.iter().skip(1).step_by(2).filter(|x| **x).count() as i64
    }

    pub fn has(&self, t: i64) -> bool {
        let p = 2 * (t - self.base);
        p >= 0 && (p as usize) < self.v.len() && self.v[p as usize]
    }

    /// Maximal runs, as closed intervals.
    pub fn intervals(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        let mut p = 0;
        while p < self.v.len() {
            if self.v[p] {
                let s = p;
                while p + 1 < self.v.len() && self.v[p + 1] {
                    p += 1;
                }
                out.push((self.base + s as i64 / 2, self.base + p as i64 / 2));
            }
            p += 1;
        }
        out
    }
}

pub fn corpus(n: usize, seed: u64, spec: &RandomSpec) -> Vec<MultilayerStreamGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_graph(&mut rng, spec)).collect()
}

struct Raw {
    base: i64,
    end: i64,
    study: Bits,
    presence: BTreeMap<NodeLayer, Bits>,
    /// Union of link intervals per unordered node-layer pair.
    pairs: BTreeMap<(NodeLayer, NodeLayer), Bits>,
    layers: BTreeMap<LayerId, Bits>,
}

fn raw(g: &MultilayerStreamGraph) -> Raw {
    let s = g.study_interval();
    let (base, end) = (s.start.0, s.end.0);
    let mut study = Bits::empty(base, end);
    study.add(s);
    let presence = g
        .node_layers()
        .iter()
        .map(|(nl, ts)| (*nl, Bits::of(base, end, ts)))
        .collect();
    let mut pairs: BTreeMap<(NodeLayer, NodeLayer), Bits> = BTreeMap::new();
    for l in g.links() {
        let key = if l.a < l.b { (l.a, l.b) } else { (l.b, l.a) };
        pairs.entry(key).or_insert_with(|| Bits::empty(base, end)).add(l.time);
    }
    let layers = g
        .space()
        .ids()
        .map(|l| (l, Bits::of(base, end, g.layer_presence(l))))
        .collect();
    Raw {
        base,
        end,
        study,
        presence,
        pairs,
        layers,
    }
}

pub fn oracle_density_mls(g: &MultilayerStreamGraph, mode: DenominatorMode) -> (i128, i128) {
    let r = raw(g);
    let linked: BTreeSet<(LayerId, LayerId)> = g
        .links()
        .iter()
        .map(|l| (l.a.layer.min(l.b.layer), l.a.layer.max(l.b.layer)))
        .collect();
    let ok = |a: NodeLayer, b: NodeLayer| match mode {
        DenominatorMode::AllPairs => true,
        DenominatorMode::IntralayerPairs => a.layer == b.layer,
        DenominatorMode::LinkedLayerPairs => linked.contains(&(a.layer.min(b.layer), a.layer.max(b.layer))),
    };
    let num = r
        .pairs
        .iter()
        .filter(|((a, b), _)| ok(*a, *b))
        .map(|(_, b)| b.cells() as i128)
        .sum();
    let nls: Vec<&NodeLayer> = r.presence.keys().collect();
    let mut den = 0i128;
    for i in 0..nls.len() {
        for j in i + 1..nls.len() {
            if ok(*nls[i], *nls[j]) {
                den += r.presence[nls[i]].and(&r.presence[nls[j]]).cells() as i128;
            }
        }
    }
    (num, den)
}

pub fn oracle_interlayer(g: &MultilayerStreamGraph, a: LayerId, b: LayerId) -> (i128, i128) {
    let r = raw(g);
    let common = r.layers[&a].and(&r.layers[&b]);
    let side = |l: LayerId| -> Vec<NodeLayer> { r.presence.keys().filter(|nl| nl.layer == l).copied().collect() };
    let (left, right) = (side(a), side(b));
    let mut den = 0i128;
    if a == b {
        for i in 0..left.len() {
            for j in i + 1..left.len() {
                den += r.presence[&left[i]].and(&r.presence[&left[j]]).and(&common).cells() as i128;
            }
        }
    } else {
        for x in &left {
            for y in &right {
                den += r.presence[x].and(&r.presence[y]).and(&common).cells() as i128;
            }
        }
    }
    let num = r
        .pairs
        .iter()
        .filter(|((x, y), _)| (x.layer == a && y.layer == b) || (x.layer == b && y.layer == a))
        .map(|(_, bits)| bits.and(&common).cells() as i128)
        .sum();
    (num, den)
}

/// Node presence and per-node-pair link union of the layer-blind stream.
pub fn oracle_aggregated(g: &MultilayerStreamGraph) -> (BTreeMap<NodeId, Bits>, BTreeMap<(NodeId, NodeId), Bits>) {
    let r = raw(g);
    let mut presence: BTreeMap<NodeId, Bits> = g.nodes().map(|u| (u, Bits::empty(r.base, r.end))).collect();
    for (nl, b) in &r.presence {
        let p = presence.get_mut(&nl.node).unwrap();
        *p = p.or(b);
    }
    let mut links: BTreeMap<(NodeId, NodeId), Bits> = BTreeMap::new();
    for l in g.links() {
        if l.a.node == l.b.node {
            continue;
        }
        let key = (l.a.node.min(l.b.node), l.a.node.max(l.b.node));
        links
            .entry(key)
            .or_insert_with(|| Bits::empty(r.base, r.end))
            .add(l.time);
    }
    (presence, links)
}

pub fn oracle_aggregated_density(g: &MultilayerStreamGraph) -> (i128, i128) {
    let (presence, links) = oracle_aggregated(g);
    let num = links.values().map(|b| b.cells() as i128).sum();
    let p: Vec<&Bits> = presence.values().collect();
    let mut den = 0i128;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            den += p[i].and(p[j]).cells() as i128;
        }
    }
    (num, den)
}

/// Summed per-record cells over study cells.
pub fn oracle_number_of_links(g: &MultilayerStreamGraph) -> (i128, i128) {
    let r = raw(g);
    let num = g
        .links()
        .iter()
        .map(|l| {
            let mut b = Bits::empty(r.base, r.end);
            b.add(l.time);
            b.cells() as i128
        })
        .sum();
    (num, r.study.cells() as i128)
}

/// `(record count, summed record cells)` of links touching `u`.
pub fn oracle_degree(g: &MultilayerStreamGraph, u: NodeId) -> (usize, i64) {
    let touching: Vec<_> = g.links().iter().filter(|l| l.a.node == u || l.b.node == u).collect();
    (
        touching.len(),
        touching.iter().map(|l| l.time.end.0 - l.time.start.0).sum(),
    )
}

pub fn oracle_degree_nl(g: &MultilayerStreamGraph, x: NodeLayer) -> (usize, i64) {
    let touching: Vec<_> = g.links().iter().filter(|l| l.a == x || l.b == x).collect();
    (
        touching.len(),
        touching.iter().map(|l| l.time.end.0 - l.time.start.0).sum(),
    )
}

fn exact(d: Density) -> (i128, i128) {
    (d.numerator, d.denominator)
}

/// Every measure of one graph against its oracle; returns the mismatches.
pub fn measure_mismatches(g: &MultilayerStreamGraph) -> Vec<String> {
    let mut bad = Vec::new();
    for mode in [
        DenominatorMode::AllPairs,
        DenominatorMode::IntralayerPairs,
        DenominatorMode::LinkedLayerPairs,
    ] {
        let (got, want) = (exact(density_mls(g, mode)), oracle_density_mls(g, mode));
        if got != want {
            bad.push(format!("density_mls {mode:?}: {got:?} vs {want:?}"));
        }
    }
    let (got, want) = (
        exact(density_stream(&aggregated_stream(g))),
        oracle_aggregated_density(g),
    );
    if got != want {
        bad.push(format!("density_stream(aggregated): {got:?} vs {want:?}"));
    }
    let ids: Vec<LayerId> = g.space().ids().collect();
    for &a in &ids {
        for &b in &ids {
            let got = exact(interlayer_density(g, a, b).unwrap());
            let want = oracle_interlayer(g, a, b);
            if got != want {
                bad.push(format!("interlayer_density({}, {}): {got:?} vs {want:?}", a.0, b.0));
            }
        }
        let got = exact(density_stream(&intralayer_stream(g, a).unwrap()));
        let want = oracle_interlayer(g, a, a);
        if got != want {
            bad.push(format!("density_stream(intralayer {}): {got:?} vs {want:?}", a.0));
        }
    }
    let study = g.study_interval();
    if study.end > study.start {
        let got = exact(number_of_links(g.links(), study).unwrap());
        let want = oracle_number_of_links(g);
        if got != want {
            bad.push(format!("number_of_links: {got:?} vs {want:?}"));
        }
    }
    let len = study.end.0 - study.start.0;
    for u in g.nodes() {
        let d = degree(g, u).unwrap();
        let (count, ticks) = oracle_degree(g, u);
        let dur_ok = len == 0 || d.duration_degree == ticks as f64 / len as f64;
        if d.count_degree != count || d.duration_ticks != ticks || !dur_ok {
            bad.push(format!("degree({}): {d:?} vs ({count}, {ticks})", u.0));
        }
    }
    for &x in g.node_layers().keys() {
        let d = degree_node_layer(g, x).unwrap();
        let (count, ticks) = oracle_degree_nl(g, x);
        if d.count_degree != count || d.duration_ticks != ticks {
            bad.push(format!("degree_node_layer({:?}): {d:?} vs ({count}, {ticks})", x));
        }
    }
    bad
}

/// Projection consistency of one graph; returns the mismatches.
pub fn projection_mismatches(g: &MultilayerStreamGraph) -> Vec<String> {
    let mut bad = Vec::new();
    let s = g.study_interval();
    let agg = aggregated_stream(g);
    let (presence, links) = oracle_aggregated(g);
    for (u, bits) in &presence {
        if Bits::of(s.start.0, s.end.0, &agg.presence[u]) != *bits {
            bad.push(format!("aggregated presence of {}", u.0));
        }
    }
    let got_keys: BTreeSet<_> = agg.links.keys().copied().collect();
    let want_keys: BTreeSet<_> = links.keys().copied().collect();
    if got_keys != want_keys {
        bad.push(format!("aggregated link pairs {got_keys:?} vs {want_keys:?}"));
    }
    for (k, bits) in &links {
        if let Some(ts) = agg.links.get(k) {
            if Bits::of(s.start.0, s.end.0, ts) != *bits {
                bad.push(format!("aggregated link presence {:?}", (k.0 .0, k.1 .0)));
            }
        }
    }
    // d_agg(u) <= sum over layers of d(u, layer), both as counts and durations
    for u in g.nodes() {
        let agg_count = agg.degree_count(u);
        let agg_cells: i64 = agg
            .links
            .iter()
            .filter(|((a, b), _)| *a == u || *b == u)
            .map(|(_, ts)| ts.measure())
            .sum();
        let (mut count, mut cells) = (0usize, 0i64);
        for (&x, _) in g.node_layers().iter().filter(|(x, _)| x.node == u) {
            let d = degree_node_layer(g, x).unwrap();
            count += d.count_degree;
            cells += d.duration_ticks;
        }
        if agg_count > count || agg_cells > cells {
            bad.push(format!(
                "aggregated degree of {}: ({agg_count}, {agg_cells}) > ({count}, {cells})",
                u.0
            ));
        }
    }
    let ids: Vec<LayerId> = g.space().ids().collect();
    let delta = density_matrix(g, &ids).unwrap();
    for (i, &l) in ids.iter().enumerate() {
        let d = density_stream(&intralayer_stream(g, l).unwrap());
        if exact(d) != exact(delta.exact[i][i]) {
            bad.push(format!("intralayer density of {} vs diagonal", l.0));
        }
    }
    bad
}

/// Plain temporal path: each hop lies on a link record present at its time,
/// hops chain and times do not decrease.
pub fn plain_valid(g: &MultilayerStreamGraph, hops: &[Hop]) -> bool {
    let on_link = |h: &Hop| {
        g.links().iter().any(|l| {
            ((l.a == h.from && l.b == h.to) || (l.a == h.to && l.b == h.from))
                && l.time.start <= h.time
                && h.time <= l.time.end
        })
    };
    hops.iter().all(on_link) && hops.windows(2).all(|w| w[0].to == w[1].from && w[0].time <= w[1].time)
}

/// Breadth-first search over (node-layer, ready instant) states with every
/// integer hop time tried.
pub fn state_reachable(
    g: &MultilayerStreamGraph,
    from: (Instant, NodeLayer),
    to: (Instant, NodeLayer),
    gamma: i64,
) -> bool {
    if from.0 > to.0 {
        return false;
    }
    if from.1 == to.1 {
        return true;
    }
    let mut seen = BTreeSet::new();
    let mut queue = std::collections::VecDeque::from([(from.1, from.0 .0)]);
    seen.insert((from.1, from.0 .0));
    while let Some((x, ready)) = queue.pop_front() {
        for l in g.links() {
            let next = if l.a == x {
                l.b
            } else if l.b == x {
                l.a
            } else {
                continue;
            };
            for t in ready.max(l.time.start.0)..=l.time.end.0.min(to.0 .0) {
                if next == to.1 {
                    return true;
                }
                let state = (next, t + gamma);
                if seen.insert(state) {
                    queue.push_back(state);
                }
            }
        }
    }
    false
}

/// Both directions of every link at every instant from one before its start
/// to one after its end.
pub fn alphabet(g: &MultilayerStreamGraph) -> Vec<Hop> {
    let mut out = Vec::new();
    for l in g.links() {
        for t in l.time.start.0 - 1..=l.time.end.0 + 1 {
            for (from, to) in [(l.a, l.b), (l.b, l.a)] {
                out.push(Hop {
                    time: Instant(t),
                    from,
                    to,
                });
            }
        }
    }
    out.sort_by_key(|h| (h.time, h.from, h.to));
    out.dedup();
    out
}

pub fn gamma_valid(g: &MultilayerStreamGraph, hops: &[Hop], gamma: i64) -> bool {
    plain_valid(g, hops) && hops.windows(2).all(|w| w[1].time.0 - w[0].time.0 >= gamma)
}

/// Every sequence of up to two hops, then every chained sequence of up to four.
pub fn sequences(alpha: &[Hop]) -> Vec<Vec<Hop>> {
    let mut out = vec![vec![]];
    for a in alpha {
        out.push(vec![*a]);
        for b in alpha {
            out.push(vec![*a, *b]);
        }
    }
    let mut frontier: Vec<Vec<Hop>> = out
        .iter()
        .filter(|s| s.len() == 2 && s[0].to == s[1].from)
        .cloned()
        .collect();
    for _ in 3..=4 {
        let mut next = Vec::new();
        for s in &frontier {
            let last = s.last().unwrap().to;
            for h in alpha.iter().filter(|h| h.from == last) {
                let mut t = s.clone();
                t.push(*h);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, k: usize, zero_share: f64) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let x = if rng.random_bool(zero_share) {
                0.0
            } else {
                rng.random::<f64>()
            };
            m[i][j] = x;
            m[j][i] = x;
        }
    }
    m
}

/// Dominant eigenpair from a dense symmetric decomposition.
pub fn eigen_oracle(m: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let k = m.len();
    let d = DMatrix::from_fn(k, k, |i, j| m[i][j]);
    let e = SymmetricEigen::new(d);
    let i = (0..k)
        .max_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]))
        .unwrap();
    (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect())
}

pub fn residual(m: &[Vec<f64>], lambda: f64, v: &[f64]) -> f64 {
    m.iter()
        .zip(v)
        .map(|(row, vi)| {
            let mv: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            (mv - lambda * vi).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}
