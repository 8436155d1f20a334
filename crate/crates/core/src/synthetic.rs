//! Seeded generators: small random multilayer stream graphs, a flight
//! network with planted carrier importance, and a contact dataset with
//! gender and class homophily.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::contacts::CLASSES;
use crate::ingest::FlightRecord;
use crate::model::{Aspect, GraphParts, LayerId, LayerSpace, MultilayerStreamGraph, NodeId, NodeLayer, TemporalLink};
use crate::time::{Interval, Resolution, TimeSet};

/// Bounds for [`random_graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub max_nodes: usize,
    pub max_layers: usize,
    /// Largest study interval end; the interval starts at 0.
    pub span: i64,
    pub max_links: usize,
    pub interlayer: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            max_nodes: 5,
            max_layers: 3,
            span: 200,
            max_links: 10,
            interlayer: true,
        }
    }
}

fn random_interval<R: Rng>(rng: &mut R, within: Interval) -> Interval {
    let a = rng.random_range(within.start.0..=within.end.0);
    let b = rng.random_range(within.start.0..=within.end.0);
    // a share of instantaneous intervals
    if rng.random_bool(0.15) {
        return Interval::point(a);
    }
    Interval::closed(a.min(b), a.max(b))
}

fn random_set<R: Rng>(rng: &mut R, within: &TimeSet, max_parts: usize) -> TimeSet {
    if within.is_empty() {
        return within.clone();
    }
    let parts = rng.random_range(1..=max_parts);
    let pieces: Vec<Interval> = (0..parts)
        .map(|_| {
            let iv = within.intervals()[rng.random_range(0..within.intervals().len())];
            random_interval(rng, iv)
        })
        .collect();
    TimeSet::from_intervals_at(within.resolution(), pieces)
}

/// A valid graph within `spec`'s bounds. Layers come from one aspect, or from
/// two aspects when the layer count allows it; some layers get a restricted
/// lifetime; links lie inside the co-presence of their endpoints.
pub fn random_graph<R: Rng>(rng: &mut R, spec: &RandomSpec) -> MultilayerStreamGraph {
    let end = rng.random_range(1..=spec.span.max(1));
    let study = Interval::closed(0, end);
    let full = TimeSet::from_interval(study);
    let k = rng.random_range(1..=spec.max_layers.max(1));
    let aspects = if k >= 2 && k % 2 == 0 && rng.random_bool(0.3) {
        vec![
            Aspect::new("x", (0..k / 2).map(|i| format!("x{i}"))).expect("distinct names"),
            Aspect::new("y", ["y0", "y1"]).expect("distinct names"),
        ]
    } else {
        vec![Aspect::new("x", (0..k).map(|i| format!("x{i}"))).expect("distinct names")]
    };
    let space = LayerSpace::new(aspects).expect("small space");
    let n = rng.random_range(1..=spec.max_nodes.max(1));
    let node_names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();

    let mut layer_presence = BTreeMap::new();
    for l in space.ids() {
        if rng.random_bool(0.3) {
            layer_presence.insert(l, random_set(rng, &full, 2));
        }
    }
    let mut node_layer_presence = BTreeMap::new();
    for u in 0..n as u32 {
        for l in space.ids() {
            if rng.random_bool(0.6) {
                let within = layer_presence.get(&l).unwrap_or(&full);
                node_layer_presence.insert(NodeLayer::new(NodeId(u), l), random_set(rng, within, 3));
            }
        }
    }
    let nls: Vec<NodeLayer> = node_layer_presence.keys().copied().collect();
    let mut links = Vec::new();
    if nls.len() >= 2 {
        for _ in 0..rng.random_range(0..=spec.max_links) {
            let x = nls[rng.random_range(0..nls.len())];
            let y = nls[rng.random_range(0..nls.len())];
            if x == y || (!spec.interlayer && x.layer != y.layer) {
                continue;
            }
            let both = node_layer_presence[&x]
                .intersect(&node_layer_presence[&y])
                .expect("same resolution");
            if both.is_empty() {
                continue;
            }
            let iv = both.intervals()[rng.random_range(0..both.intervals().len())];
            let time = random_interval(rng, iv);
            links.push(TemporalLink::new(time, x, y).expect("distinct endpoints"));
        }
    }
    MultilayerStreamGraph::from_parts(GraphParts {
        study,
        resolution: Resolution::default(),
        space,
        node_names,
        layer_presence,
        node_layer_presence,
        links,
        intralayer_only: !spec.interlayer,
    })
    .expect("generated graph satisfies closure")
}

/// Shape of [`planted_flights`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFlights {
    pub airports: usize,
    /// Number of airports each carrier serves; a larger network is a more
    /// important carrier.
    pub served: Vec<usize>,
    pub year: i32,
    pub month: u32,
    pub days: u32,
    /// Round trips per served spoke per day.
    pub trips_per_spoke: usize,
}

impl Default for PlantedFlights {
    fn default() -> Self {
        PlantedFlights {
            airports: 30,
            served: vec![3, 7, 12, 18, 25],
            year: 1990,
            month: 1,
            days: 7,
            trips_per_spoke: 2,
        }
    }
}

pub fn carrier_code(i: usize) -> String {
    format!("C{}", i + 1)
}

/// Hub-and-spoke carriers over a shared airport pool. Airports are ranked
/// once at random and carrier `i` serves the first `served[i]` of them, so
/// footprints are nested. The hub is one of the top three airports. Each
/// carrier flies
/// `trips_per_spoke` round trips per spoke per day between 06:00 and 22:00.
pub fn planted_flights(seed: u64, spec: &PlantedFlights) -> Vec<FlightRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<String> = (0..spec.airports).map(|i| format!("A{i:02}")).collect();
    pool.shuffle(&mut rng);
    let mut out = Vec::new();
    for (c, &size) in spec.served.iter().enumerate() {
        let mut served = pool[..size.clamp(2, spec.airports)].to_vec();
        let h = rng.random_range(0..served.len().min(3));
        served.swap(0, h);
        let hub = &served[0];
        for day in 1..=spec.days {
            let date = NaiveDate::from_ymd_opt(spec.year, spec.month, day).expect("valid day");
            for spoke in &served[1..] {
                for _ in 0..spec.trips_per_spoke {
                    for (from, to) in [(hub, spoke), (spoke, hub)] {
                        let dep_min = rng.random_range(6 * 60..22 * 60);
                        let arr_min = (dep_min + rng.random_range(45..240)) % (24 * 60);
                        let hhmm = |m: u32| (m / 60 * 100 + m % 60) as u16;
                        out.push(FlightRecord {
                            date,
                            carrier: carrier_code(c),
                            origin: from.clone(),
                            destination: to.clone(),
                            departure: hhmm(dep_min),
                            arrival: hhmm(arr_min),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Flight records as an on-time CSV extract.
pub fn flights_csv(records: &[FlightRecord]) -> String {
    let mut out = String::from("FlightDate,Reporting_Airline,Origin,Dest,DepTime,ArrTime,Cancelled\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{:04},{:04},0",
            r.date.format("%Y-%m-%d"),
            r.carrier,
            r.origin,
            r.destination,
            r.departure,
            r.arrival
        );
    }
    out
}

/// Shape of [`contact_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSpec {
    pub students: usize,
    pub classes: usize,
    pub days: i64,
    /// Epoch second of the first day's midnight.
    pub first_day: i64,
    /// Contact rows per day.
    pub rows_per_day: usize,
    /// Probability that a contact partner is drawn from the same class.
    pub same_class: f64,
    /// Probability that an out-of-class partner has the same gender.
    pub same_gender: f64,
}

impl Default for ContactSpec {
    fn default() -> Self {
        ContactSpec {
            students: 40,
            classes: 3,
            days: 2,
            first_day: 1_385_942_400,
            rows_per_day: 300,
            same_class: 0.8,
            same_gender: 0.8,
        }
    }
}

/// Text files of a contact dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactFiles {
    pub contacts: String,
    pub metadata: String,
    pub friendship: String,
}

/// Contacts between 08:00 and 18:00 on `days` consecutive days, on the
/// 20-second grid, with homophily in class and gender. One student has
/// unknown gender.
pub fn contact_dataset(seed: u64, spec: &ContactSpec) -> ContactFiles {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let students: Vec<(u32, &str, &str)> = (0..spec.students)
        .map(|i| {
            let class = CLASSES[i % spec.classes.clamp(1, CLASSES.len())];
            let gender = if i == spec.students - 1 {
                "U"
            } else if rng.random_bool(0.5) {
                "M"
            } else {
                "F"
            };
            (100 + i as u32, class, gender)
        })
        .collect();
    let mut metadata = String::new();
    for (id, class, gender) in &students {
        let _ = writeln!(metadata, "{id}\t{class}\t{gender}");
    }
    let mut rows = Vec::new();
    for day in 0..spec.days {
        let open = spec.first_day + day * 86_400 + 8 * 3600;
        for _ in 0..spec.rows_per_day {
            let a = rng.random_range(0..students.len());
            let same_class = rng.random_bool(spec.same_class);
            let same_gender = rng.random_bool(spec.same_gender);
            let candidates: Vec<usize> = (0..students.len())
                .filter(|&b| {
                    b != a
                        && (students[b].1 == students[a].1) == same_class
                        && (same_class || (students[b].2 == students[a].2) == same_gender)
                })
                .collect();
            let Some(&b) = candidates.get(rng.random_range(0..candidates.len().max(1))) else {
                continue;
            };
            let t = open + 20 * rng.random_range(1..=1800);
            rows.push((t, a.min(b), a.max(b)));
        }
    }
    rows.sort_unstable();
    let mut contacts = String::new();
    for (t, a, b) in rows {
        let (sa, sb) = (&students[a], &students[b]);
        let _ = writeln!(contacts, "{t} {} {} {} {}", sa.0, sb.0, sa.1, sb.1);
    }
    let mut friendship = String::new();
    for a in 0..students.len() {
        let b = (a + 1) % students.len();
        if students[a].1 == students[b].1 {
            let _ = writeln!(friendship, "{} {}", students[a].0, students[b].0);
        }
    }
    ContactFiles {
        contacts,
        metadata,
        friendship,
    }
}

/// Layers of `g` ordered by label, for stable reporting.
pub fn layers_by_label(g: &MultilayerStreamGraph) -> Vec<LayerId> {
    let mut ls: Vec<LayerId> = g.space().ids().collect();
    ls.sort_by_key(|&l| g.layer_label(l));
    ls
}
