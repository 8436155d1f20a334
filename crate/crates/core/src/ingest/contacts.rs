//! Face-to-face contact files (`t i j Ci Cj`), student metadata
//! (`id class gender`) and the timeless friendship / facebook pair lists.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{file_label, read_text, ticks_per_second, ErrorPolicy, FileReport, IngestError, IngestReport};
use crate::model::{Aspect, BuildMode, GraphBuilder, MultilayerStreamGraph, NodeLayer};
use crate::time::{Interval, Resolution};

pub const INTERACTION_ASPECT: &str = "interaction_type";
pub const GENDER_ASPECT: &str = "gender";
pub const CLASS_ASPECT: &str = "class";

pub const FACE2FACE: &str = "face2face";
pub const FRIENDSHIP: &str = "friendship";
pub const FACEBOOK: &str = "facebook";
pub const INTERACTION_TYPES: [&str; 3] = [FACE2FACE, FRIENDSHIP, FACEBOOK];
pub const GENDERS: [&str; 2] = ["M", "F"];
pub const CLASSES: [&str; 9] = ["2BIO1", "2BIO2", "2BIO3", "MP", "MP*1", "MP*2", "PC", "PC*", "PSI*"];

/// The three aspects of a contact graph.
pub fn contact_aspects() -> Vec<Aspect> {
    vec![
        Aspect::new(INTERACTION_ASPECT, INTERACTION_TYPES).expect("static aspect"),
        Aspect::new(GENDER_ASPECT, GENDERS).expect("static aspect"),
        Aspect::new(CLASS_ASPECT, CLASSES).expect("static aspect"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    U,
}

impl Gender {
    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "M" => Some(Gender::M),
            "F" => Some(Gender::F),
            "U" => Some(Gender::U),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gender::M => "M",
            Gender::F => "F",
            Gender::U => "U",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Student {
    pub class: String,
    pub gender: Gender,
}

/// One row of the contacts file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContactRecord {
    /// Epoch seconds at the end of the recording window.
    pub t: i64,
    pub i: String,
    pub j: String,
    pub ci: Option<String>,
    pub cj: Option<String>,
}

impl ContactRecord {
    pub fn parse(line: &str) -> Result<ContactRecord, String> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 5 {
            return Err(format!("expected 5 fields, found {}", fields.len()));
        }
        let t = fields[0]
            .parse::<i64>()
            .map_err(|_| format!("bad timestamp {:?}", fields[0]))?;
        if fields[1] == fields[2] {
            return Err(format!("student {} in contact with itself", fields[1]));
        }
        Ok(ContactRecord {
            t,
            i: fields[1].to_string(),
            j: fields[2].to_string(),
            ci: fields.get(3).map(|s| s.to_string()),
            cj: fields.get(4).map(|s| s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FriendshipMode {
    /// A declaration in either direction makes a link.
    #[default]
    Symmetrize,
    /// Only pairs declared in both directions make a link.
    MutualOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactOptions {
    /// Seconds covered by one contact row, ending at its timestamp.
    pub window: i64,
    pub friendship: FriendshipMode,
    pub on_error: ErrorPolicy,
    pub resolution: Resolution,
    /// Study interval in ticks; defaults to the span of the contacts.
    pub study: Option<Interval>,
}

impl Default for ContactOptions {
    fn default() -> Self {
        ContactOptions {
            window: 20,
            friendship: FriendshipMode::Symmetrize,
            on_error: ErrorPolicy::Fail,
            resolution: Resolution::SECOND,
            study: None,
        }
    }
}

fn parse_metadata(
    text: &str,
    file: &str,
    policy: ErrorPolicy,
) -> Result<(BTreeMap<String, Student>, FileReport), IngestError> {
    let mut report = FileReport::new(file);
    let mut students = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.total += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let malformed = |reason: String| IngestError::MalformedLine {
            file: file.to_string(),
            line: n + 1,
            reason,
        };
        let parsed = match fields.as_slice() {
            [id, class, gender] => match (CLASSES.contains(class), Gender::parse(gender)) {
                (true, Some(g)) => Ok((
                    id.to_string(),
                    Student {
                        class: class.to_string(),
                        gender: g,
                    },
                )),
                (false, _) => Err(malformed(format!("unknown class {class:?}"))),
                (_, None) => Err(malformed(format!("unknown gender {gender:?}"))),
            },
            _ => Err(malformed(format!("expected 3 fields, found {}", fields.len()))),
        };
        match parsed {
            Ok((id, s)) => {
                if students.insert(id.clone(), s).is_some() {
                    report.skip(policy, malformed(format!("duplicate student {id}")))?;
                } else {
                    report.accepted += 1;
                }
            }
            Err(e) => report.skip(policy, e)?,
        }
    }
    Ok((students, report))
}

struct Contact {
    t: i64,
    i: String,
    j: String,
}

fn parse_contact_rows(
    text: &str,
    file: &str,
    students: &BTreeMap<String, Student>,
    policy: ErrorPolicy,
) -> Result<(Vec<Contact>, FileReport), IngestError> {
    let mut report = FileReport::new(file);
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.total += 1;
        let rec = match ContactRecord::parse(line) {
            Ok(r) => r,
            Err(reason) => {
                report.skip(
                    policy,
                    IngestError::MalformedLine {
                        file: file.to_string(),
                        line: n + 1,
                        reason,
                    },
                )?;
                continue;
            }
        };
        match known_pair(students, &rec.i, &rec.j, file, n + 1) {
            Err(e) => report.skip(policy, e)?,
            Ok(true) => {
                report.accepted += 1;
                out.push(Contact {
                    t: rec.t,
                    i: rec.i,
                    j: rec.j,
                });
            }
            Ok(false) => report.drop_row("gender_unknown"),
        }
    }
    Ok((out, report))
}

// Ok(false) when either student has unknown gender.
fn known_pair(
    students: &BTreeMap<String, Student>,
    i: &str,
    j: &str,
    file: &str,
    line: usize,
) -> Result<bool, IngestError> {
    let mut usable = true;
    for id in [i, j] {
        match students.get(id) {
            None => {
                return Err(IngestError::UnknownStudentId {
                    file: file.to_string(),
                    line,
                    id: id.to_string(),
                });
            }
            Some(s) => usable &= s.gender != Gender::U,
        }
    }
    Ok(usable)
}

fn parse_pairs(
    text: &str,
    file: &str,
    students: &BTreeMap<String, Student>,
    policy: ErrorPolicy,
    mode: FriendshipMode,
) -> Result<(BTreeSet<(String, String)>, FileReport), IngestError> {
    let mut report = FileReport::new(file);
    let mut declared: Vec<(String, String)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.total += 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let malformed = |reason: String| IngestError::MalformedLine {
            file: file.to_string(),
            line: n + 1,
            reason,
        };
        let (i, j) = match fields.as_slice() {
            [i, j] | [i, j, _] if i == j => {
                report.skip(policy, malformed(format!("student {i} paired with itself")))?;
                continue;
            }
            [i, j] => (*i, *j),
            // facebook pairs carry a 0/1 flag
            [i, j, flag] => match *flag {
                "1" => (*i, *j),
                "0" => {
                    report.drop_row("not_linked");
                    continue;
                }
                other => {
                    report.skip(policy, malformed(format!("bad flag {other:?}")))?;
                    continue;
                }
            },
            _ => {
                report.skip(
                    policy,
                    malformed(format!("expected 2 or 3 fields, found {}", fields.len())),
                )?;
                continue;
            }
        };
        match known_pair(students, i, j, file, n + 1) {
            Err(e) => report.skip(policy, e)?,
            Ok(false) => report.drop_row("gender_unknown"),
            Ok(true) => declared.push((i.to_string(), j.to_string())),
        }
    }
    let directed: BTreeSet<(&str, &str)> = declared.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut pairs = BTreeSet::new();
    for (a, b) in &declared {
        if mode == FriendshipMode::MutualOnly && !directed.contains(&(b.as_str(), a.as_str())) {
            report.drop_row("not_mutual");
            continue;
        }
        report.accepted += 1;
        let key = if a < b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        pairs.insert(key);
    }
    Ok((pairs, report))
}

// Numeric ids sort numerically.
fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    (a.len(), a).cmp(&(b.len(), b))
}

/// Builds a contact graph from file contents; see [`parse_contacts`].
pub fn parse_contacts_str(
    contacts: &str,
    metadata: &str,
    friendship: Option<&str>,
    facebook: Option<&str>,
    opts: &ContactOptions,
) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    build(
        ("contacts", contacts),
        ("metadata", metadata),
        friendship.map(|t| ("friendship", t)),
        facebook.map(|t| ("facebook", t)),
        opts,
    )
}

/// Reads a contact dataset.
///
/// Every contact row becomes a link `[t − window, t]` on the `face2face`
/// layer of each student's own gender and class; friendship and facebook
/// pairs become links over the whole study interval. Rows touching a student
/// of unknown gender are dropped and counted.
pub fn parse_contacts(
    contacts: &Path,
    metadata: &Path,
    friendship: Option<&Path>,
    facebook: Option<&Path>,
    opts: &ContactOptions,
) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    let read = |p: &Path| -> Result<(String, String), IngestError> { Ok((file_label(p), read_text(p)?)) };
    let c = read(contacts)?;
    let m = read(metadata)?;
    let f = friendship.map(read).transpose()?;
    let b = facebook.map(read).transpose()?;
    build(
        (&c.0, &c.1),
        (&m.0, &m.1),
        f.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
        b.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
        opts,
    )
}

fn build(
    contacts: (&str, &str),
    metadata: (&str, &str),
    friendship: Option<(&str, &str)>,
    facebook: Option<(&str, &str)>,
    opts: &ContactOptions,
) -> Result<(MultilayerStreamGraph, IngestReport), IngestError> {
    let tps = ticks_per_second(opts.resolution)?;
    let (students, meta_report) = parse_metadata(metadata.1, metadata.0, opts.on_error)?;
    let (rows, mut contact_report) = parse_contact_rows(contacts.1, contacts.0, &students, opts.on_error)?;
    let mut report = IngestReport::default();
    report.files.push(meta_report);

    let study = match opts.study {
        Some(s) => s,
        None => {
            let lo = rows.iter().map(|c| c.t).min();
            let hi = rows.iter().map(|c| c.t).max();
            match (lo, hi) {
                (Some(lo), Some(hi)) => Interval::closed((lo - opts.window) * tps, hi * tps),
                _ => {
                    return Err(IngestError::NoRecords {
                        file: contacts.0.to_string(),
                    })
                }
            }
        }
    };

    let mut timeless = Vec::new();
    for (kind, source, mode) in [
        (FRIENDSHIP, friendship, opts.friendship),
        (FACEBOOK, facebook, FriendshipMode::Symmetrize),
    ] {
        if let Some((name, text)) = source {
            let (pairs, r) = parse_pairs(text, name, &students, opts.on_error, mode)?;
            report.files.push(r);
            timeless.push((kind, pairs));
        }
    }

    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for c in &rows {
        ids.insert(&c.i);
        ids.insert(&c.j);
    }
    for (_, pairs) in &timeless {
        for (a, b) in pairs {
            ids.insert(a);
            ids.insert(b);
        }
    }
    let mut ids: Vec<&str> = ids.into_iter().collect();
    ids.sort_by(|a, b| id_order(a, b));

    let mut builder =
        GraphBuilder::new(study, contact_aspects(), BuildMode::AutoMaterialize)?.resolution(opts.resolution);
    for id in &ids {
        builder.node(id);
    }
    let endpoint = |b: &mut GraphBuilder, kind: &str, id: &str| -> Result<NodeLayer, IngestError> {
        let s = &students[id];
        let layer = b.layer(&[kind, s.gender.label(), s.class.as_str()])?;
        Ok(NodeLayer::new(b.node(id), layer))
    };
    let mut outside = 0;
    for c in &rows {
        let time = Interval::closed((c.t - opts.window) * tps, c.t * tps);
        if !study.contains_interval(&time) {
            outside += 1;
            continue;
        }
        let x = endpoint(&mut builder, FACE2FACE, &c.i)?;
        let y = endpoint(&mut builder, FACE2FACE, &c.j)?;
        builder.add_link(time, x, y)?;
    }
    if outside > 0 {
        contact_report.accepted -= outside;
        *contact_report.dropped.entry("outside_study".into()).or_default() += outside;
    }
    report.files.insert(0, contact_report);
    for (kind, pairs) in &timeless {
        for (a, b) in pairs {
            let x = endpoint(&mut builder, kind, a)?;
            let y = endpoint(&mut builder, kind, b)?;
            builder.add_link(study, x, y)?;
        }
    }
    let g = builder.finish()?;
    for f in &report.files {
        log::info!(
            "{}: {} rows, {} accepted, dropped {:?}",
            f.file,
            f.total,
            f.accepted,
            f.dropped
        );
    }
    Ok((g, report))
}

/// Number of maximal contact intervals: abutting or overlapping contact rows
/// of one pair count once.
pub fn merged_contact_count(g: &MultilayerStreamGraph) -> usize {
    let Some(aspect) = g.space().aspect_index(INTERACTION_ASPECT) else {
        return 0;
    };
    let f2f = g.aspects()[aspect].position(FACE2FACE);
    g.linked_pairs()
        .iter()
        .filter(|((a, b), _)| {
            Some(g.space().coordinate(a.layer, aspect)) == f2f && Some(g.space().coordinate(b.layer, aspect)) == f2f
        })
        .map(|(_, ts)| ts.intervals().len())
        .sum()
}
