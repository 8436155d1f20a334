//! Versioned JSON interchange format.
//!
//! ```text
//! {"header":{"format_version":1,"tick_resolution":1000000000,"study_interval":[0,100],"sha256":"…"},
//!  "nodes":["u","v"],
//!  "aspects":[{"name":"type","elements":["a","b"]}],
//!  "intralayer_only":false,
//!  "layer_presence":[[layer,[[s,e],…]],…],
//!  "node_layer_presence":[[node,layer,[[s,e],…]],…],
//!  "links":[[s,e,node_a,layer_a,node_b,layer_b],…]}
//! ```
//!
//! Nodes and layers are indexes; a layer index is the mixed-radix layer id
//! over the aspects. The writer emits sorted arrays and a SHA-256 of the
//! document serialized without the checksum, so output is byte-stable.
//! The checksum is optional on read.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{read_text, IngestError};
use crate::model::{Aspect, GraphParts, LayerId, LayerSpace, MultilayerStreamGraph, NodeId, NodeLayer, TemporalLink};
use crate::output::write_atomic;
use crate::time::{Interval, Resolution, TimeSet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    tick_resolution: u64,
    study_interval: [i64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    sha256: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AspectDoc {
    name: String,
    elements: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    header: Header,
    nodes: Vec<String>,
    aspects: Vec<AspectDoc>,
    intralayer_only: bool,
    layer_presence: Vec<(u32, Vec<[i64; 2]>)>,
    node_layer_presence: Vec<(u32, u32, Vec<[i64; 2]>)>,
    links: Vec<[i64; 6]>,
}

fn pairs(ts: &TimeSet) -> Vec<[i64; 2]> {
    ts.intervals().iter().map(|iv| [iv.start.0, iv.end.0]).collect()
}

fn to_document(g: &MultilayerStreamGraph) -> Document {
    let study = g.study_interval();
    Document {
        header: Header {
            format_version: FORMAT_VERSION,
            tick_resolution: g.resolution().0,
            study_interval: [study.start.0, study.end.0],
            sha256: None,
        },
        nodes: g.node_names().to_vec(),
        aspects: g
            .aspects()
            .iter()
            .map(|a| AspectDoc {
                name: a.name.clone(),
                elements: a.elementary_layers.clone(),
            })
            .collect(),
        intralayer_only: g.intralayer_only(),
        layer_presence: g
            .explicit_layer_presence()
            .iter()
            .map(|(l, ts)| (l.0, pairs(ts)))
            .collect(),
        node_layer_presence: g
            .node_layers()
            .iter()
            .map(|(nl, ts)| (nl.node.0, nl.layer.0, pairs(ts)))
            .collect(),
        links: g
            .links()
            .iter()
            .map(|l| {
                [
                    l.time.start.0,
                    l.time.end.0,
                    i64::from(l.a.node.0),
                    i64::from(l.a.layer.0),
                    i64::from(l.b.node.0),
                    i64::from(l.b.layer.0),
                ]
            })
            .collect(),
    }
}

fn digest(doc: &Document) -> String {
    let bytes = serde_json::to_vec(doc).expect("document serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Serialized document with checksum.
pub fn write_interchange_string(g: &MultilayerStreamGraph) -> String {
    let mut doc = to_document(g);
    doc.header.sha256 = Some(digest(&doc));
    let mut s = serde_json::to_string(&doc).expect("document serializes");
    s.push('\n');
    s
}

pub fn write_interchange(g: &MultilayerStreamGraph, path: &Path) -> Result<(), IngestError> {
    write_atomic(path, write_interchange_string(g).as_bytes()).map_err(|e| IngestError::io(path, e))
}

pub fn read_interchange(path: &Path) -> Result<MultilayerStreamGraph, IngestError> {
    read_interchange_str(&read_text(path)?)
}

fn schema(path: impl Into<String>, reason: impl Into<String>) -> IngestError {
    IngestError::SchemaError {
        path: path.into(),
        reason: reason.into(),
    }
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value, IngestError> {
    v.get(key)
        .ok_or_else(|| schema(format!("{path}{key}"), "missing field"))
}

fn typed<T: serde::de::DeserializeOwned>(v: &Value, path: &str) -> Result<T, IngestError> {
    T::deserialize(v).map_err(|e| schema(path, e.to_string()))
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, IngestError> {
    v.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn intervals(raw: &[[i64; 2]], study: Interval, path: &str) -> Result<TimeSet, IngestError> {
    let mut out = Vec::with_capacity(raw.len());
    for (k, &[s, e]) in raw.iter().enumerate() {
        let iv = Interval::new(s, e).map_err(|err| schema(format!("{path}[{k}]"), err.to_string()))?;
        if !study.contains_interval(&iv) {
            return Err(schema(
                format!("{path}[{k}]"),
                format!("interval {iv} outside study interval {study}"),
            ));
        }
        out.push(iv);
    }
    Ok(TimeSet::from_intervals(out))
}

/// Parses and validates a document; schema problems are reported with a path
/// into the document before the checksum is compared.
pub fn read_interchange_str(text: &str) -> Result<MultilayerStreamGraph, IngestError> {
    let g = parse(text, true)?;
    match g.validate().into_iter().next() {
        Some(v) => Err(schema("", v.to_string())),
        None => Ok(g),
    }
}

pub fn read_interchange_unvalidated(path: &Path) -> Result<MultilayerStreamGraph, IngestError> {
    read_interchange_unvalidated_str(&read_text(path)?)
}

/// Schema and checksum checks only; closure constraints are left to
/// [`MultilayerStreamGraph::validate`].
pub fn read_interchange_unvalidated_str(text: &str) -> Result<MultilayerStreamGraph, IngestError> {
    parse(text, false)
}

fn parse(text: &str, closure: bool) -> Result<MultilayerStreamGraph, IngestError> {
    let root: Value = serde_json::from_str(text)?;
    let header_v = field(&root, "header", "")?;
    let version = field(header_v, "format_version", "header.")?;
    if version.as_u64() != Some(u64::from(FORMAT_VERSION)) {
        return Err(IngestError::FormatVersionMismatch {
            found: version.to_string(),
            expected: FORMAT_VERSION,
        });
    }
    let header: Header = typed(header_v, "header")?;
    let [s, e] = header.study_interval;
    let study = Interval::new(s, e).map_err(|err| schema("header.study_interval", err.to_string()))?;
    if header.tick_resolution == 0 {
        return Err(schema("header.tick_resolution", "must be positive"));
    }
    let resolution = Resolution(header.tick_resolution);

    let nodes: Vec<String> = typed(field(&root, "nodes", "")?, "nodes")?;
    let mut seen = std::collections::HashSet::new();
    for (i, n) in nodes.iter().enumerate() {
        if !seen.insert(n) {
            return Err(schema(format!("nodes[{i}]"), format!("duplicate node {n:?}")));
        }
    }
    let mut aspects = Vec::new();
    for (i, a) in array(field(&root, "aspects", "")?, "aspects")?.iter().enumerate() {
        let path = format!("aspects[{i}]");
        let doc: AspectDoc = typed(a, &path)?;
        aspects.push(Aspect::new(doc.name, doc.elements).map_err(|err| schema(path, err.to_string()))?);
    }
    let space = LayerSpace::new(aspects).map_err(|err| schema("aspects", err.to_string()))?;
    let intralayer_only: bool = typed(field(&root, "intralayer_only", "")?, "intralayer_only")?;

    let check_layer = |l: u32, path: &str| -> Result<LayerId, IngestError> {
        let id = LayerId(l);
        if space.contains(id) {
            Ok(id)
        } else {
            Err(schema(path, format!("layer index {l} out of range")))
        }
    };
    let check_node = |n: i64, path: &str| -> Result<NodeId, IngestError> {
        if n >= 0 && (n as usize) < nodes.len() {
            Ok(NodeId(n as u32))
        } else {
            Err(schema(path, format!("node index {n} out of range")))
        }
    };

    let mut layer_presence = BTreeMap::new();
    for (i, item) in array(field(&root, "layer_presence", "")?, "layer_presence")?
        .iter()
        .enumerate()
    {
        let path = format!("layer_presence[{i}]");
        let (l, raw): (u32, Vec<[i64; 2]>) = typed(item, &path)?;
        let id = check_layer(l, &path)?;
        let ts = intervals(&raw, study, &path)?;
        if layer_presence.insert(id, ts).is_some() {
            return Err(schema(path, "duplicate layer entry"));
        }
    }
    let full = TimeSet::from_interval(study);
    let mut node_layer_presence = BTreeMap::new();
    for (i, item) in array(field(&root, "node_layer_presence", "")?, "node_layer_presence")?
        .iter()
        .enumerate()
    {
        let path = format!("node_layer_presence[{i}]");
        let (n, l, raw): (u32, u32, Vec<[i64; 2]>) = typed(item, &path)?;
        let nl = NodeLayer::new(check_node(i64::from(n), &path)?, check_layer(l, &path)?);
        let ts = intervals(&raw, study, &path)?;
        let layer_ts = layer_presence.get(&nl.layer).unwrap_or(&full);
        if !layer_ts.is_superset_of(&ts) {
            return Err(schema(
                path,
                format!("presence {ts} exceeds the layer's presence {layer_ts}"),
            ));
        }
        if node_layer_presence.insert(nl, ts).is_some() {
            return Err(schema(path, "duplicate node-layer entry"));
        }
    }
    let mut links = Vec::new();
    for (i, item) in array(field(&root, "links", "")?, "links")?.iter().enumerate() {
        let path = format!("links[{i}]");
        let [s, e, na, la, nb, lb]: [i64; 6] = typed(item, &path)?;
        let time = Interval::new(s, e).map_err(|err| schema(&path, err.to_string()))?;
        if !study.contains_interval(&time) {
            return Err(schema(
                path,
                format!("link interval {time} outside study interval {study}"),
            ));
        }
        let layer = |x: i64| u32::try_from(x).map_err(|_| schema(&path, format!("layer index {x} out of range")));
        let x = NodeLayer::new(check_node(na, &path)?, check_layer(layer(la)?, &path)?);
        let y = NodeLayer::new(check_node(nb, &path)?, check_layer(layer(lb)?, &path)?);
        let link = TemporalLink::new(time, x, y).ok_or_else(|| schema(&path, "link joins a node-layer to itself"))?;
        if intralayer_only && !link.is_intralayer() {
            return Err(schema(path, "interlayer link in an intralayer-only graph"));
        }
        for end in [x, y].into_iter().filter(|_| closure) {
            let covered = node_layer_presence
                .get(&end)
                .is_some_and(|ts: &TimeSet| ts.contains_interval(&time));
            if !covered {
                return Err(schema(
                    path,
                    format!(
                        "link {time} outside presence of node {} on layer {}",
                        end.node.0, end.layer.0
                    ),
                ));
            }
        }
        links.push(link);
    }

    if let Some(expected) = &header.sha256 {
        let doc: Document = serde_json::from_value(root.clone()).map_err(|e| schema("", e.to_string()))?;
        let doc = Document {
            header: Header {
                sha256: None,
                ..doc.header
            },
            ..doc
        };
        let found = digest(&doc);
        if &found != expected {
            return Err(IngestError::ChecksumMismatch {
                expected: expected.clone(),
                found,
            });
        }
    }

    Ok(MultilayerStreamGraph::from_parts_unchecked(GraphParts {
        study,
        resolution,
        space,
        node_names: nodes,
        layer_presence,
        node_layer_presence,
        links,
        intralayer_only,
    }))
}
